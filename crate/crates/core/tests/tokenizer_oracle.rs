use topicrate::corpus::{language_heuristic, stopword_ratio, tokenize, StopWords};

const PARAGRAPH: &str = include_str!("data/ptb_paragraph.txt");
const REFERENCE: &str = include_str!("data/ptb_paragraph.tokens");

const SPANISH: &str = "El faro se levantaba sobre las rocas negras de la costa. \
Durante el invierno, el guardián encendía la lámpara cada tarde y \
escuchaba el viento que golpeaba las ventanas. Nadie visitaba la isla \
desde que el transbordador dejó de funcionar, pero él no se quejaba. \
Tenía libros, café y una radio vieja que apenas captaba las noticias \
del continente.";

#[test]
fn matches_reference_treebank_tokenization() {
    let expected: Vec<&str> = REFERENCE.lines().filter(|l| !l.is_empty()).collect();
    let got = tokenize(PARAGRAPH);
    let first_diff = got.iter().zip(&expected).position(|(a, b)| a != b);
    assert_eq!(first_diff, None, "first divergence: {:?}", first_diff.map(|i| (&got[i], expected[i])));
    assert_eq!(got.len(), expected.len());
}

#[test]
fn spanish_paragraph_fails_language_check() {
    let stopwords = StopWords::english();
    let tokens = tokenize(SPANISH);
    // By hand: "y" twice and "no" once are the only English stopwords, 3 of 66 tokens.
    let hits = tokens.iter().filter(|t| stopwords.contains(t)).count();
    assert_eq!((hits, tokens.len()), (3, 66));
    let ratio = stopword_ratio(&tokens, &stopwords);
    assert_eq!(ratio, hits as f64 / tokens.len() as f64);
    assert!(ratio < 0.05, "ratio {ratio} with hits {hits}");
    assert!(!language_heuristic(&tokens, &stopwords));
}

#[test]
fn english_paragraph_passes_language_check() {
    let stopwords = StopWords::english();
    assert!(language_heuristic(&tokenize(PARAGRAPH), &stopwords));
}
