//! Alternating machines: simulation, acceptance trees and the GA encoding.

use adjacent::formulas::check_fragments;
use adjacent::ga_encoder::{atm_accepts, build_model_from_tree, encode, Atm};
use adjacent::structures::models;

const MACHINE: &str = r#"{
  "states": [{"name": "s", "kind": "existential"}, {"name": "t", "kind": "existential"},
             {"name": "acc", "kind": "accept"}, {"name": "rej", "kind": "reject"}],
  "alphabet": ["0", "1"], "blank": "_", "initial": "s",
  "transitions": [
    {"from": "s", "read": "0", "to": "t", "write": "0", "move": 1},
    {"from": "s", "read": "1", "to": "t", "write": "1", "move": 1},
    {"from": "s", "read": "_", "to": "t", "write": "_", "move": 1},
    {"from": "t", "read": "1", "to": "acc", "write": "1", "move": -1},
    {"from": "t", "read": "0", "to": "rej", "write": "0", "move": 0},
    {"from": "t", "read": "_", "to": "rej", "write": "_", "move": 0}],
  "space_exponent": 1}"#;

fn main() {
    let m = Atm::from_json(MACHINE).unwrap();
    println!("tape length {}", m.tape_length());
    for input in ["01", "00", "11"] {
        let w0 = m.parse_input(input).unwrap();
        let phi = encode(&m, &w0).unwrap();
        let report = check_fragments(&phi);
        print!("{input}: encoding size {}, in GA {}", phi.size(), report.in_ga);
        match atm_accepts(&m, &w0).unwrap() {
            Some(tree) => {
                let model = build_model_from_tree(&m, &w0, &tree).unwrap();
                println!(
                    ", accepted with a {}-node tree; its model ({} elements) satisfies the encoding: {}",
                    tree.nodes.len(),
                    model.domain_size,
                    models(&model, &phi)
                );
            }
            None => println!(", rejected"),
        }
    }
}
