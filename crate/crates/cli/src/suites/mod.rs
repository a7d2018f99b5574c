pub mod fatou;
pub mod identities;
pub mod lemmas;
pub mod simulate;
