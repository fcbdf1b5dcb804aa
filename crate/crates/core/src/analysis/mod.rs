//! Time–frequency maps of shaped fields, parameter scans and the files they produce.

pub mod report;
mod scan;
mod spectrogram;

pub use scan::{half_spacing, run_cell, scan_2d, scan_sigma, Cell, ScanAxis, ScanBase, ScanRecord, ScanResult, Workers};
pub use spectrogram::{husimi, Spectrogram, Stripe};
