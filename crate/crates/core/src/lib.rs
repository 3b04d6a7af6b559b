pub mod color;
pub mod config;
pub mod dasc;
pub mod eaf;
pub mod error;
pub mod formats;
pub mod geofield;
pub mod gidasc;
pub mod image;
pub mod learn;
pub mod lss;
pub mod matching;
pub mod oracle;
pub mod pattern;
pub mod superpixel;
pub mod wmsd;
