pub use isomon;
