//! Initialization files.
//!
//! One entry per line: `name order value` gives an initial value,
//! `guess name order value` a guess, and `t0 value` the expansion point.
//! Blank lines and text after `#` are ignored.

use daestruct::codelist::DaeModel;
use daestruct::executor::InitData;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
    #[error("line {line}: `{name}` order {order} given twice")]
    Duplicate { line: usize, name: String, order: u32 },
}

fn syntax(line: usize, message: impl Into<String>) -> InitFileError {
    InitFileError::Syntax {
        line,
        message: message.into(),
    }
}

fn number(line: usize, tok: &str) -> Result<f64, InitFileError> {
    tok.parse().map_err(|_| syntax(line, format!("`{tok}` is not a number")))
}

pub fn parse_init(text: &str, model: &DaeModel) -> Result<InitData, InitFileError> {
    let mut init = InitData::default();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        let (guess, rest) = match toks.as_slice() {
            [] => continue,
            ["t0", v] => {
                init.t0 = number(line, v)?;
                continue;
            }
            ["guess", rest @ ..] => (true, rest),
            rest => (false, rest),
        };
        let [name, order, value] = rest else {
            return Err(syntax(line, "expected `[guess] name order value`"));
        };
        let j = model.variable_index(name).ok_or_else(|| InitFileError::UnknownVariable {
            line,
            name: name.to_string(),
        })?;
        let order: u32 = order
            .parse()
            .map_err(|_| syntax(line, format!("`{order}` is not a derivative order")))?;
        let value = number(line, value)?;
        let map = if guess { &mut init.guesses } else { &mut init.values };
        if map.insert((j, order), value).is_some() {
            return Err(InitFileError::Duplicate {
                line,
                name: name.to_string(),
                order,
            });
        }
    }
    Ok(init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use daestruct::codelist::parse_model;

    fn model() -> DaeModel {
        parse_model("var x, y; eq A: Der(x,1) - y = 0; eq B: x + y = 0;").unwrap()
    }

    #[test]
    fn reads_both_categories() {
        let init = parse_init("# header\nt0 0.5\nx 0 1.5\nguess y 1 -2 # trailing\n\n", &model()).unwrap();
        assert_eq!(init.t0, 0.5);
        assert_eq!(init.values.get(&(0, 0)), Some(&1.5));
        assert_eq!(init.guesses.get(&(1, 1)), Some(&-2.0));
    }

    #[test]
    fn rejects_bad_lines() {
        let m = model();
        assert!(matches!(parse_init("z 0 1", &m), Err(InitFileError::UnknownVariable { line: 1, .. })));
        assert!(matches!(parse_init("x 0", &m), Err(InitFileError::Syntax { line: 1, .. })));
        assert!(matches!(parse_init("\nx -1 2", &m), Err(InitFileError::Syntax { line: 2, .. })));
        assert!(matches!(parse_init("x 0 1\nx 0 2", &m), Err(InitFileError::Duplicate { line: 2, .. })));
    }
}
