#![no_main]

use coil::encoding::Tokenizer;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let tok = Tokenizer::default();
    let tokens = tok.split(text);
    for t in &tokens {
        assert!(!t.is_empty());
        assert!(!t.chars().any(char::is_whitespace));
    }
    let vocab = tok.build_vocab([text]);
    let seq = tok.tokenize(text, &vocab);
    assert_eq!(seq.tokens, tokens);
    assert!(seq.token_ids.iter().all(|&id| id != 0));
});
