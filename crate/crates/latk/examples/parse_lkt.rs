//! Parse an `.lkt` program, print it back, and evaluate it.

use latk::cli::{evaluate, parse, BuiltValue};
use latk::lambda::CoefficientSet;

const PROGRAM: &str = r#"
# a purely infinite block and a finite block, compared
block O4 {
  kind = kirchberg;
  k0 = Z/3;
  unit = 1;
  k1 = Z^0;
}

block compacts {
  kind = compactsLike;
}

let Ktilde = unitize(compacts);
let E = extension(compacts, O4, class = split);

check E;
compare Ktilde E mode latticed;
"#;

fn main() {
    let prog = parse(PROGRAM).expect("parses");
    println!("re-serialized program:\n{prog}");
    let ctx = evaluate(&[prog], &CoefficientSet::default_set()).expect("evaluates");
    for (name, value) in &ctx.values {
        match value {
            BuiltValue::Latticed(m) => {
                println!(
                    "{name}: latticed value with {} ideals, valid: {}",
                    m.lattice.size(),
                    m.validate().passed()
                )
            }
            BuiltValue::Lambda(m) => {
                println!("{name}: coefficient module {m:?}")
            }
        }
    }
    println!("directives carried by the file: {}", ctx.directives.len());
}
