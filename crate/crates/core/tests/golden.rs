//! The introductory one- and three-color evolutions, cell for cell.

use bbs_core::dynamics::full_update_word;
use bbs_core::lattice::parse_symbols;
use bbs_core::{apply_word_config, Configuration, Route};

fn cfg(kappa: usize, cells: &str) -> Configuration {
    Configuration::finite(kappa, 1, parse_symbols(cells).unwrap()).unwrap()
}

const ONE_COLOR: [&str; 5] = [
    "0 1 1 1 0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0",
    "0 0 0 0 1 1 1 0 0 0 0 1 0 0 0 0 0 0 0 0 0",
    "0 0 0 0 0 0 0 1 1 1 0 0 1 0 0 0 0 0 0 0 0",
    // the source display typesets the second to last cell as "\_0"
    "0 0 0 0 0 0 0 0 0 0 1 1 0 1 1 0 0 0 0 0 0",
    "0 0 0 0 0 0 0 0 0 0 0 0 1 0 0 1 1 1 0 0 0",
];

const THREE_COLOR: &str = "0 1 2 0 3 1 3 2 0 3 0 1 1 2 3 0 0 0 0 0 0 0 0 0";
const T1: &str = "0 0 2 1 3 0 3 2 1 3 0 0 0 2 3 1 1 0 0 0 0 0 0 0";
const T2T1: &str = "0 0 0 1 3 2 3 0 1 3 2 0 0 0 3 1 1 2 0 0 0 0 0 0";
const T: &str = "0 0 0 1 0 2 0 3 1 0 2 3 3 0 0 1 1 2 3 0 0 0 0 0";
const T_SQ: &str = "0 0 0 0 1 0 2 0 3 1 0 0 0 2 3 3 0 0 0 1 1 2 3 0";

#[test]
fn one_color_solitons() {
    for route in [Route::Pitman, Route::Direct] {
        let mut cur = cfg(1, ONE_COLOR[0]);
        for (t, want) in ONE_COLOR.iter().enumerate().skip(1) {
            cur = apply_word_config(&cur, &[1], route).unwrap();
            assert!(cur.same_state(&cfg(1, want)), "T^{t} via {route:?}: {cur}");
        }
    }
}

#[test]
fn three_color_steps() {
    let eta = cfg(3, THREE_COLOR);
    for route in [Route::Pitman, Route::Direct] {
        let cases: [(&[i32], &str); 4] = [
            (&[1], T1),
            (&[1, 2], T2T1),
            (&[1, 2, 3], T),
            (&[1, 2, 3, 1, 2, 3], T_SQ),
        ];
        for (word, want) in cases {
            let got = apply_word_config(&eta, word, route).unwrap();
            assert!(
                got.same_state(&cfg(3, want)),
                "{word:?} via {route:?}: {got}"
            );
        }
    }
    assert_eq!(full_update_word(3), vec![1, 2, 3]);
}

#[test]
fn printed_strings_are_window_exact() {
    // the displayed windows are long enough that nothing leaves them
    let got = apply_word_config(&cfg(3, THREE_COLOR), &[1, 2, 3, 1, 2, 3], Route::Pitman).unwrap();
    let want = cfg(3, T_SQ);
    assert_eq!(got.extended(1, 24).unwrap().cells(), want.cells());
}
