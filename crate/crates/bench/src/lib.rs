//! Synthetic workloads for the solver benchmarks.

use std::fmt::Write;

/// A single method with `blocks` loop bodies chained one after another.
///
/// Each block copies taint around a small loop, so the solver has back
/// edges to chase and sets that grow with `blocks`.
pub fn chained_loops(blocks: usize) -> String {
    let mut src = String::from("method main() { x0 = source()\n");
    for b in 0..blocks {
        let (cur, next) = (format!("x{b}"), format!("x{}", b + 1));
        writeln!(src, "  i{b} = 0").unwrap();
        writeln!(src, "H{b}: c{b} = i{b} == 4").unwrap();
        writeln!(src, "  if c{b} goto E{b}").unwrap();
        writeln!(src, "  t{b} = {cur}").unwrap();
        writeln!(src, "  {next} = t{b}").unwrap();
        writeln!(src, "  i{b} = i{b} + 1").unwrap();
        writeln!(src, "  goto H{b}").unwrap();
        writeln!(src, "E{b}: sink({next})").unwrap();
    }
    src.push_str("  return }\n");
    src
}
