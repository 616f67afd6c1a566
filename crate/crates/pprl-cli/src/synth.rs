//! Synthetic first-name datasets for the demo and regression runs.

use pprl_core::prep::{Dataset, Record};
use pprl_core::rng::SplitMix64;

/// A pool of common first names, lowercase letters only. Names of seven or
/// more characters, so a 20% corruption rate lands one to two edits per
/// record the way it does on real name columns.
const FIRST_NAMES: &[&str] = &[
    "abigail",
    "alexander",
    "alexandra",
    "annabelle",
    "anthony",
    "barbara",
    "beatrice",
    "benjamin",
    "bernard",
    "brandon",
    "cameron",
    "caroline",
    "catherine",
    "charles",
    "charlotte",
    "christian",
    "christina",
    "christopher",
    "clarence",
    "constance",
    "cornelius",
    "deborah",
    "dominic",
    "dorothy",
    "douglas",
    "eleanor",
    "elizabeth",
    "emmanuel",
    "evangeline",
    "federico",
    "ferdinand",
    "frances",
    "francesca",
    "francis",
    "franklin",
    "frederick",
    "gabriella",
    "genevieve",
    "geoffrey",
    "gregory",
    "gwendolyn",
    "harrison",
    "heather",
    "isabella",
    "jacqueline",
    "jeffrey",
    "jennifer",
    "jessica",
    "johannes",
    "jonathan",
    "josephine",
    "katherine",
    "kenneth",
    "kimberly",
    "lawrence",
    "leonardo",
    "lillian",
    "madeleine",
    "madison",
    "margaret",
    "marguerite",
    "matthew",
    "maximilian",
    "melissa",
    "meredith",
    "michael",
    "michelle",
    "montgomery",
    "natalie",
    "nathaniel",
    "nicholas",
    "octavia",
    "patricia",
    "patrick",
    "penelope",
    "persephone",
    "priscilla",
    "raymond",
    "rebecca",
    "richard",
    "rosalind",
    "russell",
    "salvatore",
    "samantha",
    "sebastian",
    "seraphina",
    "stephanie",
    "stephen",
    "sylvester",
    "theodore",
    "timothy",
    "valentina",
    "valerie",
    "vanessa",
    "victoria",
    "vincent",
    "virginia",
    "vivienne",
    "wallace",
    "wilhelmina",
    "william",
    "winifred",
    "zachary",
];

/// Draw `n` records from the name pool (with repetition, as real name
/// columns have) under a fixed seed. Ids are "r00001", "r00002", ...
pub fn synthetic_first_names(n: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let records = (1..=n)
        .map(|i| Record {
            id: format!("r{i:05}"),
            value: FIRST_NAMES[rng.next_below(FIRST_NAMES.len() as u64) as usize].to_string(),
        })
        .collect();
    Dataset {
        records,
        source_name: format!("synthetic-first-names-{n}-seed{seed}"),
        linkage_columns: vec!["first_name".into()],
    }
}
