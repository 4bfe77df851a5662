//! Hardware graphs against reference edge lists exported from the vendor's
//! graph generators (linear node indices, `u < v`).

use chromanneal::topology::{build_hardware, HardwareGraph};

fn check(name: &str, text: &str) {
    let reference = HardwareGraph::from_edge_list(text).unwrap();
    let built = build_hardware(reference.kind, reference.m).unwrap();
    assert_eq!(built.graph.n_nodes(), reference.graph.n_nodes(), "{name}: node count");
    assert_eq!(built.graph.edges(), reference.graph.edges(), "{name}: edge set");
}

macro_rules! reference {
    ($test:ident, $file:literal) => {
        #[test]
        fn $test() {
            check($file, include_str!(concat!("fixtures/", $file)));
        }
    };
}

reference!(chimera_1, "chimera_1.txt");
reference!(chimera_3, "chimera_3.txt");
reference!(pegasus_2, "pegasus_2.txt");
reference!(pegasus_3, "pegasus_3.txt");
reference!(zephyr_1, "zephyr_1.txt");
reference!(zephyr_2, "zephyr_2.txt");
