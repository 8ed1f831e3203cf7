pub mod s_lemma;
