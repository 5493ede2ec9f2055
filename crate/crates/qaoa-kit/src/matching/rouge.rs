//! ROUGE-L similarity over token sequences: F1 of the longest common
//! subsequence against candidate and reference lengths.

/// Lowercased alphanumeric tokens, split on non-alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Longest-common-subsequence length via the standard DP table.
pub(crate) fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for item in a {
        for (j, other) in b.iter().enumerate() {
            row[j + 1] = if item == other {
                prev[j] + 1
            } else {
                row[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// ROUGE-L F1 over pre-tokenized sequences. Empty-sequence convention:
/// both empty scores 1, exactly one empty scores 0.
pub fn rouge_l_tokens(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() && reference.is_empty() {
        return 1.0;
    }
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / candidate.len() as f64;
    let recall = lcs / reference.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// ROUGE-L F1 between two raw texts.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_score_one() {
        assert_eq!(rouge_l("book the flight now", "book the flight now"), 1.0);
    }

    #[test]
    fn partial_overlap_matches_hand_computation() {
        // LCS = 2, P = 2/2, R = 2/3 -> F1 = 0.8
        let score = rouge_l("york city", "new york city");
        assert!((score - 0.8).abs() < 1e-12, "{score}");
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(rouge_l("", "new york"), 0.0);
        assert_eq!(rouge_l("new york", ""), 0.0);
        assert_eq!(rouge_l("", ""), 1.0);
        assert_eq!(rouge_l("...", "!!"), 1.0); // both tokenize empty
    }

    #[test]
    fn reversal_of_distinct_tokens_leaves_lcs_one() {
        let score = rouge_l("city york", "york city");
        // LCS = 1, P = R = 1/2 -> F1 = 0.5
        assert!((score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tokenization_lowercases_and_splits_on_punctuation() {
        assert_eq!(tokenize("New-York,  City!"), vec!["new", "york", "city"]);
        assert_eq!(rouge_l("NEW YORK CITY", "new-york-city"), 1.0);
    }
}
