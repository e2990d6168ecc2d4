//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rgn::data::{Label, QuestionType, WiqaExample};

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect()
}

/// out[i][c] = sum_j (sum_t a[i][t] w[t][j]) / sqrt(d) * b[j][c]
pub fn bilinear_reference(a: &[Vec<f64>], b: &[Vec<f64>], w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (k, d) = (a.len(), a[0].len());
    let mut out = vec![vec![0.0; d]; k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for t in 0..d {
                s += a[i][t] * w[t][j];
            }
            for c in 0..d {
                out[i][c] += s / (d as f64).sqrt() * b[j][c];
            }
        }
    }
    out
}

/// Edges read back from the rendered paragraph text.
pub fn parse_edges(ex: &WiqaExample) -> Vec<(String, String, bool)> {
    ex.paragraph
        .iter()
        .map(|s| {
            let words: Vec<&str> = s.trim_end_matches('.').split_whitespace().collect();
            assert_eq!(words.len(), 3, "unexpected sentence {s:?}");
            let positive = match words[1] {
                "increases" => true,
                "decreases" => false,
                other => panic!("unexpected verb {other}"),
            };
            (words[0].to_string(), words[2].to_string(), positive)
        })
        .collect()
}

pub fn parse_query(ex: &WiqaExample) -> (String, String) {
    let rest = ex.question.strip_prefix("suppose more ").unwrap();
    let (cause, rest) = rest.split_once(" happens , how will it affect ").unwrap();
    let effect = rest.strip_suffix(" ?").unwrap();
    (cause.to_string(), effect.to_string())
}

/// Every simple directed path from `from` to `to`, as (length, sign).
pub fn all_paths(edges: &[(String, String, bool)], from: &str, to: &str) -> Vec<(usize, bool)> {
    fn walk(
        edges: &[(String, String, bool)],
        at: &str,
        to: &str,
        seen: &mut Vec<String>,
        len: usize,
        sign: bool,
        out: &mut Vec<(usize, bool)>,
    ) {
        if at == to && len > 0 {
            out.push((len, sign));
            return;
        }
        for (s, t, p) in edges {
            if s == at && !seen.contains(t) {
                seen.push(t.clone());
                walk(edges, t, to, seen, len + 1, sign == *p, out);
                seen.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(edges, from, to, &mut vec![from.to_string()], 0, true, &mut out);
    out
}

pub fn has_cycle(edges: &[(String, String, bool)]) -> bool {
    let nodes: Vec<&String> = edges.iter().flat_map(|(s, t, _)| [s, t]).collect();
    nodes.iter().any(|n| {
        edges
            .iter()
            .filter(|(s, _, _)| s == *n)
            .any(|(_, t, _)| t == *n || !all_paths(edges, t, n).is_empty())
    })
}

/// Checks one generated example against brute-force path enumeration.
pub fn check_synthetic(ex: &WiqaExample) -> Result<(), String> {
    let edges = parse_edges(ex);
    if has_cycle(&edges) {
        return Err(format!("{}: cyclic graph", ex.id));
    }
    let (cause, effect) = parse_query(ex);
    let paths = all_paths(&edges, &cause, &effect);
    if paths.len() > 1 {
        return Err(format!("{}: {} paths", ex.id, paths.len()));
    }
    let (label, hops) = match paths.first() {
        None => (Label::NoEffect, 0),
        Some(&(len, true)) => (Label::More, len),
        Some(&(len, false)) => (Label::Less, len),
    };
    let qt = if label == Label::NoEffect {
        QuestionType::NoEffect
    } else {
        QuestionType::InPara
    };
    if ex.label != Some(label) || ex.hops != Some(hops as u8) || ex.question_type != Some(qt) {
        return Err(format!(
            "{}: generated {:?}/{:?}, enumeration gives {label}/{hops}",
            ex.id, ex.label, ex.hops
        ));
    }
    Ok(())
}
