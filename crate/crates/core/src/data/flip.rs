use super::WiqaExample;

/// Polarity word pairs; the table is a bijection.
pub const POLARITY_PAIRS: &[(&str, &str)] = &[
    ("more", "less"),
    ("increase", "decrease"),
    ("increases", "decreases"),
    ("increased", "decreased"),
    ("increasing", "decreasing"),
    ("higher", "lower"),
    ("larger", "smaller"),
    ("stronger", "weaker"),
];

const FLIP_SUFFIX: &str = "~flip";

fn counterpart(word: &str) -> Option<&'static str> {
    let lower = word.to_lowercase();
    POLARITY_PAIRS.iter().find_map(|&(a, b)| {
        if lower == a {
            Some(b)
        } else if lower == b {
            Some(a)
        } else {
            None
        }
    })
}

fn match_case(template: &str, word: &str) -> String {
    if template.chars().all(|c| !c.is_lowercase()) && template.chars().count() > 1 {
        word.to_uppercase()
    } else if template.chars().next().is_some_and(char::is_uppercase) {
        let mut c = word.chars();
        c.next()
            .map(|f| f.to_uppercase().chain(c).collect())
            .unwrap_or_default()
    } else {
        word.to_string()
    }
}

/// Swaps the first polarity word of the question and maps the label
/// more ↔ less. Returns `None` when the question has no polarity word.
///
/// Applying it twice restores the original example.
pub fn flip_question(ex: &WiqaExample) -> Option<WiqaExample> {
    let text = &ex.question;
    let mut start = None;
    let mut found = None;
    for (i, ch) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        let word_char = ch.is_alphanumeric();
        match (start, word_char) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                if let Some(other) = counterpart(&text[s..i]) {
                    found = Some((s, i, other));
                    break;
                }
                start = None;
            }
            _ => {}
        }
    }
    let (s, e, other) = found?;
    let question = format!("{}{}{}", &text[..s], match_case(&text[s..e], other), &text[e..]);
    let id = match ex.id.strip_suffix(FLIP_SUFFIX) {
        Some(orig) => orig.to_string(),
        None => format!("{}{FLIP_SUFFIX}", ex.id),
    };
    Some(WiqaExample::new(
        id,
        question,
        ex.paragraph.clone(),
        ex.label.map(|l| l.flipped()),
        ex.question_type,
        ex.hops,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::Label;
    use super::*;
    use proptest::prelude::*;

    fn ex(q: &str, label: Label) -> WiqaExample {
        WiqaExample::new("e1", q, vec!["a b.".into()], Some(label), None, Some(1))
    }

    #[test]
    fn flips_first_polarity_word_only() {
        let f = flip_question(&ex("Suppose more rain, how will it affect less flooding?", Label::More)).unwrap();
        assert_eq!(f.question, "Suppose less rain, how will it affect less flooding?");
        assert_eq!(f.label, Some(Label::Less));
        assert_eq!(f.id, "e1~flip");
    }

    #[test]
    fn preserves_case_and_no_effect() {
        let f = flip_question(&ex("Higher heat", Label::NoEffect)).unwrap();
        assert_eq!(f.question, "Lower heat");
        assert_eq!(f.label, Some(Label::NoEffect));
        let f = flip_question(&ex("MORE heat", Label::Less)).unwrap();
        assert_eq!(f.question, "LESS heat");
    }

    #[test]
    fn partial_words_do_not_match() {
        assert!(flip_question(&ex("moreover the lesson", Label::More)).is_none());
    }

    #[test]
    fn table_is_a_bijection() {
        let mut all: Vec<&str> = POLARITY_PAIRS.iter().flat_map(|&(a, b)| [a, b]).collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    proptest! {
        #[test]
        fn flip_is_an_involution(
            prefix in "[a-z ]{0,12}",
            pair in 0..POLARITY_PAIRS.len(),
            side in any::<bool>(),
            suffix in "[a-z ,?]{0,12}",
            label in 0usize..3,
        ) {
            let (a, b) = POLARITY_PAIRS[pair];
            let q = format!("{prefix} {} {suffix}", if side { a } else { b });
            let e = ex(&q, Label::from_index(label).unwrap());
            let once = flip_question(&e).unwrap();
            prop_assert_ne!(&once.question, &e.question);
            let twice = flip_question(&once).unwrap();
            prop_assert_eq!(twice, e);
        }
    }
}
