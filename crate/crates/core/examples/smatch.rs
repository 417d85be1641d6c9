//! Score graph pairs with hill climbing and with exact search:
//! `cargo run --example smatch`.

use sbmt_amr::amr::parse_penman;
use sbmt_amr::smatch::{smatch_score, to_triples, SmatchOptions};

const PAIRS: [(&str, &str); 3] = [
    (
        "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
        "(x / want-01 :ARG0 (y / boy) :ARG1 (z / go-02 :ARG0 y))",
    ),
    (
        "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
        "(w / want-01 :ARG0 (b / girl) :ARG1 (g / go-02))",
    ),
    (
        "(s / see-01 :ARG0 (g / girl) :ARG1 (c / city :mod (b / big)))",
        "(c / city :mod (b / big) :ARG1-of (s / see-01))",
    ),
];

fn main() -> anyhow::Result<()> {
    for (test, gold) in PAIRS {
        let (t, g) = (parse_penman(test)?, parse_penman(gold)?);
        let hill = smatch_score(&t, &g, &SmatchOptions::default())?;
        let exact = smatch_score(
            &t,
            &g,
            &SmatchOptions {
                exact: true,
                ..SmatchOptions::default()
            },
        )?;
        println!("test {test}\ngold {gold}");
        println!(
            "  triples {} / {}, matched {}, P {:.4} R {:.4} F {:.4} (exact F {:.4})",
            to_triples(&t).len(true),
            to_triples(&g).len(true),
            hill.matched,
            hill.precision,
            hill.recall,
            hill.f,
            exact.f
        );
        for (tv, gv) in &hill.mapping {
            println!("    {tv} -> {}", gv.as_deref().unwrap_or("-"));
        }
    }
    Ok(())
}
