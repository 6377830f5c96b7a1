//! ASCII AIGER (`aag`) for single-output combinational circuits.

use std::collections::HashMap;

use thiserror::Error;

use super::{AigCircuit, AndGate, Literal};
use crate::truthtable::MAX_VARS;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AigerError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("latches are not supported (L = {0})")]
    Latches(usize),
    #[error("expected exactly one output, found {0}")]
    Outputs(usize),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("literal {0} is never defined")]
    Dangling(u32),
    #[error("AND gates form a cycle through variable {0}")]
    Cycle(u32),
    #[error("too many inputs: {0}")]
    TooManyInputs(usize),
}

pub(super) fn write(c: &AigCircuit, sep: &str) -> String {
    let n = c.n();
    let max_var = n + c.size();
    let mut lines = Vec::with_capacity(2 + n + c.size());
    lines.push(format!("aag {} {} 0 1 {}", max_var, n, c.size()));
    for v in 0..n {
        lines.push(format!("{}", 2 * (v + 1)));
    }
    lines.push(format!("{}", c.output().code()));
    for (i, g) in c.gates().iter().enumerate() {
        // AIGER lists the larger right-hand side first.
        lines.push(format!(
            "{} {} {}",
            2 * c.gate_node(i),
            g.fanin1().code(),
            g.fanin0().code()
        ));
    }
    let mut text = lines.join(sep);
    if sep == "\n" {
        text.push('\n');
    }
    text
}

fn numbers(line: &str, lineno: usize, expected: usize) -> Result<Vec<u32>, AigerError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != expected {
        return Err(AigerError::Syntax {
            line: lineno,
            msg: format!("expected {expected} fields, found {}", parts.len()),
        });
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<u32>().map_err(|_| AigerError::Syntax {
                line: lineno,
                msg: format!("not an unsigned integer: {p:?}"),
            })
        })
        .collect()
}

pub(super) fn parse(text: &str) -> Result<AigCircuit, AigerError> {
    let mut lines = text
        .split(['\n', ';'])
        .map(|l| l.trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| AigerError::Header("empty input".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "aag" {
        return Err(AigerError::Header(header.to_string()));
    }
    let nums: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| AigerError::Header(header.to_string()))?;
    let (max_var, n_in, n_latch, n_out, n_and) = (nums[0], nums[1], nums[2], nums[3], nums[4]);
    if n_latch != 0 {
        return Err(AigerError::Latches(n_latch));
    }
    if n_out != 1 {
        return Err(AigerError::Outputs(n_out));
    }
    if n_in > MAX_VARS {
        return Err(AigerError::TooManyInputs(n_in));
    }
    if max_var < n_in + n_and {
        return Err(AigerError::Header(format!(
            "M = {max_var} is smaller than I + A = {}",
            n_in + n_and
        )));
    }
    let max_lit = 2 * max_var as u32 + 1;

    let mut next_line = |what: &str| {
        lines
            .next()
            .ok_or_else(|| AigerError::Header(format!("missing {what} line")))
    };

    // AIGER variable -> our node index.
    let mut var_node: HashMap<u32, usize> = HashMap::new();
    for i in 0..n_in {
        let (ln, line) = next_line("input")?;
        let lit = numbers(line, ln, 1)?[0];
        if lit < 2 || lit & 1 == 1 || lit > max_lit {
            return Err(AigerError::Syntax {
                line: ln,
                msg: format!("bad input literal {lit}"),
            });
        }
        if var_node.insert(lit >> 1, i + 1).is_some() {
            return Err(AigerError::Syntax {
                line: ln,
                msg: format!("input literal {lit} defined twice"),
            });
        }
    }
    let (ln, line) = next_line("output")?;
    let output = numbers(line, ln, 1)?[0];
    if output > max_lit {
        return Err(AigerError::Dangling(output));
    }

    let mut ands: Vec<(u32, u32, u32)> = Vec::with_capacity(n_and);
    let mut and_of: HashMap<u32, usize> = HashMap::new();
    for _ in 0..n_and {
        let (ln, line) = next_line("and")?;
        let v = numbers(line, ln, 3)?;
        let (lhs, r0, r1) = (v[0], v[1], v[2]);
        if lhs < 2 || lhs & 1 == 1 || lhs > max_lit || r0 > max_lit || r1 > max_lit {
            return Err(AigerError::Syntax {
                line: ln,
                msg: format!("bad AND line {line:?}"),
            });
        }
        if var_node.contains_key(&(lhs >> 1)) || and_of.insert(lhs >> 1, ands.len()).is_some() {
            return Err(AigerError::Syntax {
                line: ln,
                msg: format!("variable {} defined twice", lhs >> 1),
            });
        }
        ands.push((lhs, r0, r1));
    }
    // Anything after the AND section is a symbol table or comment.

    // Order gates topologically; AIGER ASCII does not require it.
    let mut state = vec![0u8; ands.len()];
    let mut order = Vec::with_capacity(ands.len());
    for root in 0..ands.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, false)];
        while let Some((g, expanded)) = stack.pop() {
            if expanded {
                state[g] = 2;
                order.push(g);
                continue;
            }
            if state[g] == 2 {
                continue;
            }
            if state[g] == 1 {
                return Err(AigerError::Cycle(ands[g].0 >> 1));
            }
            state[g] = 1;
            stack.push((g, true));
            for rhs in [ands[g].1, ands[g].2] {
                let var = rhs >> 1;
                if var == 0 || var_node.contains_key(&var) {
                    continue;
                }
                match and_of.get(&var) {
                    Some(&child) => {
                        if state[child] == 1 {
                            return Err(AigerError::Cycle(var));
                        }
                        if state[child] == 0 {
                            stack.push((child, false));
                        }
                    }
                    None => return Err(AigerError::Dangling(rhs)),
                }
            }
        }
    }

    let mut circuit = AigCircuit::new(n_in);
    for g in order {
        let (lhs, r0, r1) = ands[g];
        let t = |lit: u32| translate(lit, &var_node);
        let a = t(r0)?;
        let b = t(r1)?;
        let node = circuit.num_nodes();
        circuit.gates.push(AndGate::new(a, b));
        var_node.insert(lhs >> 1, node);
    }
    circuit.output = translate(output, &var_node)?;
    Ok(circuit)
}

fn translate(lit: u32, var_node: &HashMap<u32, usize>) -> Result<Literal, AigerError> {
    let var = lit >> 1;
    if var == 0 {
        return Ok(Literal::from_code(lit));
    }
    let node = var_node.get(&var).ok_or(AigerError::Dangling(lit))?;
    Ok(Literal::new(*node, lit & 1 == 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::tests::random_circuit;
    use proptest::prelude::*;

    #[test]
    fn constant_false_circuit() {
        let text = AigCircuit::new(0).to_aiger();
        assert_eq!(text, "aag 0 0 0 1 0\n0\n");
    }

    #[test]
    fn single_gate_header() {
        let mut c = AigCircuit::new(2);
        let g = c.add_and(c.input(0), c.input(1)).unwrap();
        c.set_output(g).unwrap();
        let text = c.to_aiger();
        assert_eq!(text.lines().next(), Some("aag 3 2 0 1 1"));
        assert_eq!(text, "aag 3 2 0 1 1\n2\n4\n6\n6 4 2\n");
        assert_eq!(c.to_aiger_compact(), "aag 3 2 0 1 1;2;4;6;6 4 2");
        assert_eq!(AigCircuit::from_aiger(&text).unwrap(), c);
    }

    #[test]
    fn parses_demorgan_or_with_symbols() {
        let src = "aag 5 3 0 1 2\n2\n4\n6\n11\n8 2 4\n10 9 7\ni0 a\ni1 b\no0 f\nc\nfree text\n";
        let c = AigCircuit::from_aiger(src).unwrap();
        // !( !(a & b) & !c ) = (a & b) | c
        assert_eq!(c.evaluate().unwrap().bits(), 0xf8);
    }

    #[test]
    fn accepts_out_of_order_gates() {
        let src = "aag 5 2 0 1 2\n2\n4\n10\n10 8 3\n8 2 4\n";
        let c = AigCircuit::from_aiger(src).unwrap();
        assert_eq!(c.validate(), Ok(()));
        // AND(AND(a, b), !a) is constant false.
        assert_eq!(c.evaluate().unwrap().bits(), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            AigCircuit::from_aiger("aag 1 0 1 0 0\n"),
            Err(AigerError::Latches(1))
        ));
        assert!(matches!(
            AigCircuit::from_aiger("aig 0 0 0 1 0\n0\n"),
            Err(AigerError::Header(_))
        ));
        assert!(matches!(
            AigCircuit::from_aiger("aag 0 0 0 2 0\n0\n1\n"),
            Err(AigerError::Outputs(2))
        ));
        assert!(matches!(
            AigCircuit::from_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2 8\n"),
            Err(AigerError::Syntax { .. })
        ));
        assert!(matches!(
            AigCircuit::from_aiger("aag 4 2 0 1 1\n2\n4\n6\n6 2 8\n"),
            Err(AigerError::Dangling(8))
        ));
        assert!(matches!(
            AigCircuit::from_aiger("aag 4 1 0 1 2\n2\n6\n6 8 2\n8 6 2\n"),
            Err(AigerError::Cycle(_))
        ));
        assert!(matches!(
            AigCircuit::from_aiger("aag 2 1 0 1 1\n2\n4\n"),
            Err(AigerError::Header(_))
        ));
    }

    proptest! {
        #[test]
        fn roundtrip(c in random_circuit()) {
            let back = AigCircuit::from_aiger(&c.to_aiger()).unwrap();
            prop_assert_eq!(&back, &c);
            let compact = AigCircuit::from_aiger(&c.to_aiger_compact()).unwrap();
            prop_assert_eq!(&compact, &c);
            prop_assert_eq!(back.to_aiger(), c.to_aiger());
        }
    }
}
