pub mod cases;
pub mod gradcheck;
pub mod oracle;
pub mod training;
pub mod representability;
