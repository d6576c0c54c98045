//! Fuzzes the grid-table importer: accepted tables must reprint and
//! reparse to identical nodes and an identical rendering.

#![no_main]

use libfuzzer_sys::fuzz_target;
use semichaos::simulator::parse_grid_table;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(grid) = parse_grid_table(src) else { return };
    let table = grid.to_table();
    let again =
        parse_grid_table(&table).unwrap_or_else(|e| panic!("printed table rejected: {e}"));
    assert_eq!(grid.nodes(), again.nodes(), "nodes drifted through the round trip");
    assert_eq!(table, again.to_table(), "table rendering is not a fixed point");
});
