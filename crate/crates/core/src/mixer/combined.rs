//! `paste`-style combined triple files: line i of the output is line i of
//! every language file joined by tabs.

use crate::error::{Error, Result};

const FIELDS: usize = 3;

fn lines(text: &str) -> Vec<&str> {
    text.split_terminator('\n').collect()
}

/// Tab-joins line i of every input. Inputs are `(name, contents)` pairs in
/// language order; every line must hold exactly three fields.
pub fn emit_combined(inputs: &[(&str, &str)]) -> Result<String> {
    let Some(&(first_name, _)) = inputs.first() else {
        return Err(Error::Config("no triple files to combine".into()));
    };
    let split: Vec<Vec<&str>> = inputs.iter().map(|(_, text)| lines(text)).collect();
    let expected = split[0].len();
    for ((name, _), ls) in inputs.iter().zip(&split) {
        if ls.len() != expected {
            return Err(Error::Alignment(format!(
                "{name} has {} lines but {first_name} has {expected}",
                ls.len()
            )));
        }
        if let Some(i) = ls.iter().position(|l| l.split('\t').count() != FIELDS) {
            return Err(Error::parse(*name, i + 1, "expected 3 tab-separated fields"));
        }
    }
    let width: usize = inputs.iter().map(|(_, t)| t.len()).sum::<usize>() + expected * inputs.len();
    let mut out = String::with_capacity(width);
    for i in 0..expected {
        for (j, ls) in split.iter().enumerate() {
            if j > 0 {
                out.push('\t');
            }
            out.push_str(ls[i]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Inverse of [`emit_combined`]: recovers `languages` LF-terminated files.
pub fn split_combined(combined: &str, languages: usize) -> Result<Vec<String>> {
    if languages == 0 {
        return Err(Error::Config("language count must be positive".into()));
    }
    let mut outputs = vec![String::new(); languages];
    for (i, line) in lines(combined).into_iter().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != FIELDS * languages {
            return Err(Error::parse(
                "combined",
                i + 1,
                format!("expected {} fields, found {}", FIELDS * languages, fields.len()),
            ));
        }
        for (out, group) in outputs.iter_mut().zip(fields.chunks(FIELDS)) {
            out.push_str(&group.join("\t"));
            out.push('\n');
        }
    }
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paste_semantics() {
        let out = emit_combined(&[("en", "q\tp1\tn1\n"), ("de", "q\tp2\tn2\n")]).unwrap();
        assert_eq!(out, "q\tp1\tn1\tq\tp2\tn2\n");
    }

    #[test]
    fn empty_files() {
        assert_eq!(emit_combined(&[("a", ""), ("b", "")]).unwrap(), "");
        assert_eq!(split_combined("", 2).unwrap(), ["", ""]);
    }

    #[test]
    fn unequal_counts_name_the_file() {
        let err = emit_combined(&[("en.tsv", "a\tb\tc\n"), ("fr.tsv", "")]).unwrap_err();
        assert!(matches!(&err, Error::Alignment(m) if m.contains("fr.tsv")), "{err}");
    }

    #[test]
    fn field_count_enforced() {
        assert!(emit_combined(&[("en", "a\tb\n")]).is_err());
        assert!(split_combined("a\tb\tc\n", 2).is_err());
    }

    #[test]
    fn five_files_fifteen_fields() {
        let file: String = (0..1000).map(|i| format!("q{i}\tp{i}\tn{i}\n")).collect();
        let names = ["en", "fr", "de", "it", "es"];
        let inputs: Vec<(&str, &str)> = names.iter().map(|n| (*n, file.as_str())).collect();
        let out = emit_combined(&inputs).unwrap();
        assert_eq!(out.lines().count(), 1000);
        assert!(out.lines().all(|l| l.split('\t').count() == 15));
    }

    fn field() -> impl Strategy<Value = String> {
        "[a-zA-Zäß0-9 .,]{1,12}"
    }

    proptest! {
        #[test]
        fn round_trip(rows in proptest::collection::vec(proptest::collection::vec((field(), field(), field()), 3), 0..20)) {
            let files: Vec<String> = (0..3)
                .map(|lang| rows.iter().map(|r| {
                    let (q, p, n) = &r[lang];
                    format!("{q}\t{p}\t{n}\n")
                }).collect())
                .collect();
            let inputs: Vec<(&str, &str)> = files.iter().map(|f| ("x", f.as_str())).collect();
            let combined = emit_combined(&inputs).unwrap();
            prop_assert_eq!(split_combined(&combined, 3).unwrap(), files);
        }
    }
}
