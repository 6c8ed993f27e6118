use rvdecay_core::harness::{run_corpus, RunOptions};

#[test]
fn every_corpus_entry_passes() {
    let report = run_corpus(None, &RunOptions::default()).unwrap();
    for e in &report.entries {
        println!("[{}]", e.name);
        for a in &e.assertions {
            println!("  {}", a);
        }
    }
    let failed: Vec<_> = report
        .failures()
        .map(|(n, a)| format!("{}: {}", n, a))
        .collect();
    assert!(failed.is_empty(), "{:#?}", failed);
}
