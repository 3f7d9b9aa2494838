//! Small regular grammar for navigation instructions:
//!
//! `<article> <color>? <class> [<relation phrase> <landmark>]* [with <attr> <value> [and ...]]`
//!
//! Landmark names are matched against the known names, longest first.

use std::collections::BTreeMap;

use super::QueryError;
use crate::vocab::{Color, ObjectClass, Relation, SizeClass};
use crate::world::{GoalSpec, RelationConstraint};

#[derive(Debug, Clone)]
struct Token {
    text: String,
    offset: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() || ch == ',' {
            if let Some(s) = start.take() {
                push_token(&mut out, &text[s..i], s);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        push_token(&mut out, &text[s..], s);
    }
    out
}

fn push_token(out: &mut Vec<Token>, raw: &str, offset: usize) {
    let t = raw.trim_end_matches(['.', '!', '?', ';']);
    if !t.is_empty() {
        out.push(Token {
            text: t.to_ascii_lowercase(),
            offset,
        });
    }
}

const DIRECTIONS: [(&str, Relation); 8] = [
    ("north", Relation::NorthOf),
    ("south", Relation::SouthOf),
    ("east", Relation::EastOf),
    ("west", Relation::WestOf),
    ("northeast", Relation::NortheastOf),
    ("northwest", Relation::NorthwestOf),
    ("southeast", Relation::SoutheastOf),
    ("southwest", Relation::SouthwestOf),
];

fn phrase_table() -> Vec<(Vec<String>, Relation)> {
    let fixed: [(&str, Relation); 15] = [
        ("in front of", Relation::NorthOf),
        ("behind", Relation::SouthOf),
        ("near the corner of", Relation::NearCorner),
        ("at the corner of", Relation::NearCorner),
        ("near corner of", Relation::NearCorner),
        ("adjacent to", Relation::AdjacentTo),
        ("next to", Relation::AdjacentTo),
        ("beside", Relation::AdjacentTo),
        ("alongside", Relation::AdjacentTo),
        ("along", Relation::AdjacentTo),
        ("on", Relation::Contains),
        ("in", Relation::Contains),
        ("inside", Relation::Contains),
        ("within", Relation::Contains),
        ("at", Relation::Contains),
    ];
    let mut t: Vec<(Vec<String>, Relation)> = fixed
        .iter()
        .map(|(p, r)| (p.split(' ').map(str::to_string).collect(), *r))
        .collect();
    for (d, r) in DIRECTIONS {
        t.push((vec![format!("{d}"), "of".into()], r));
        if d.len() > 5 {
            // north-east / north east spellings
            let (a, b) = d.split_at(5);
            t.push((vec![format!("{a}-{b}"), "of".into()], r));
            t.push((vec![a.to_string(), b.to_string(), "of".into()], r));
        }
    }
    t.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
    t
}

fn starts_with(tokens: &[Token], words: &[String]) -> bool {
    tokens.len() >= words.len() && tokens.iter().zip(words).all(|(t, w)| t.text == *w)
}

fn parse_error(tokens: &[Token], i: usize, text: &str, message: &str) -> QueryError {
    QueryError::Parse {
        position: tokens.get(i).map_or(text.len(), |t| t.offset),
        message: message.to_string(),
    }
}

/// Parse an instruction against the known landmark names.
pub fn parse_instruction(text: &str, landmarks: &[&str]) -> Result<GoalSpec, QueryError> {
    let tokens = tokenize(text);
    let mut i = 0;
    if !matches!(
        tokens.first().map(|t| t.text.as_str()),
        Some("a" | "an" | "the")
    ) {
        return Err(parse_error(
            &tokens,
            0,
            text,
            "expected an article (a, an, the)",
        ));
    }
    i += 1;

    let mut attributes = BTreeMap::new();
    if let Some(c) = tokens.get(i).and_then(|t| Color::parse_word(&t.text)) {
        attributes.insert("color".to_string(), c.as_str().to_string());
        i += 1;
    }

    let two = tokens
        .get(i..i + 2)
        .map(|w| format!("{}_{}", w[0].text, w[1].text));
    let class = if let Some(c) = two.as_deref().and_then(ObjectClass::from_noun) {
        i += 2;
        c
    } else if let Some(c) = tokens.get(i).and_then(|t| ObjectClass::from_noun(&t.text)) {
        i += 1;
        c
    } else {
        return Err(parse_error(
            &tokens,
            i,
            text,
            "expected an object class noun",
        ));
    };

    let names: Vec<(Vec<String>, &str)> = {
        let mut v: Vec<_> = landmarks
            .iter()
            .map(|n| {
                (
                    n.split_whitespace()
                        .map(str::to_ascii_lowercase)
                        .collect::<Vec<_>>(),
                    *n,
                )
            })
            .filter(|(w, _)| !w.is_empty())
            .collect();
        v.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        v
    };
    let phrases = phrase_table();

    let mut anchor: Option<String> = None;
    let mut chain = Vec::new();
    while i < tokens.len() && tokens[i].text != "with" {
        let Some((words, relation)) = phrases.iter().find(|(w, _)| starts_with(&tokens[i..], w))
        else {
            return Err(parse_error(
                &tokens,
                i,
                text,
                "expected a relation phrase or `with`",
            ));
        };
        i += words.len();
        if i >= tokens.len() {
            return Err(parse_error(&tokens, i, text, "expected a landmark name"));
        }
        let found = names
            .iter()
            .find(|(w, _)| starts_with(&tokens[i..], w))
            .or_else(|| {
                if tokens[i].text == "the" {
                    names.iter().find(|(w, _)| starts_with(&tokens[i + 1..], w))
                } else {
                    None
                }
            });
        let Some((words, name)) = found else {
            let rest: Vec<&str> = tokens[i..]
                .iter()
                .take_while(|t| t.text != "with")
                .map(|t| t.text.as_str())
                .collect();
            return Err(QueryError::UnknownLandmark {
                position: tokens[i].offset,
                name: rest.join(" "),
            });
        };
        if tokens[i].text == "the" && words.first().map(String::as_str) != Some("the") {
            i += 1;
        }
        i += words.len();
        let landmark = match &anchor {
            None => {
                anchor = Some(name.to_string());
                None
            }
            Some(a) if a == name => None,
            Some(_) => Some(name.to_string()),
        };
        chain.push(RelationConstraint {
            relation: *relation,
            qualifier: None,
            landmark,
        });
    }

    if i < tokens.len() {
        // `with` clause
        i += 1;
        loop {
            let Some(t) = tokens.get(i) else {
                return Err(parse_error(&tokens, i, text, "expected an attribute"));
            };
            let (key, value) = match t.text.as_str() {
                "color" | "colour" => {
                    let v = tokens.get(i + 1).and_then(|t| Color::parse_word(&t.text));
                    let Some(v) = v else {
                        return Err(parse_error(&tokens, i + 1, text, "expected a color"));
                    };
                    i += 2;
                    ("color", v.as_str())
                }
                "size" => {
                    let v = tokens
                        .get(i + 1)
                        .and_then(|t| t.text.parse::<SizeClass>().ok());
                    let Some(v) = v else {
                        return Err(parse_error(
                            &tokens,
                            i + 1,
                            text,
                            "expected small, medium or large",
                        ));
                    };
                    i += 2;
                    ("size", v.as_str())
                }
                w => {
                    if let Some(c) = Color::parse_word(w) {
                        i += 1;
                        ("color", c.as_str())
                    } else if let Ok(s) = w.parse::<SizeClass>() {
                        i += 1;
                        ("size", s.as_str())
                    } else {
                        return Err(parse_error(&tokens, i, text, "expected an attribute"));
                    }
                }
            };
            attributes.insert(key.to_string(), value.to_string());
            match tokens.get(i).map(|t| t.text.as_str()) {
                None => break,
                Some("and") => i += 1,
                Some(_) => {
                    return Err(parse_error(
                        &tokens,
                        i,
                        text,
                        "expected `and` or end of input",
                    ))
                }
            }
        }
    }

    Ok(GoalSpec {
        target_class: class,
        target_attributes: attributes,
        anchor_landmark: anchor,
        relation_chain: chain,
        target_object_id: None,
    })
}

fn noun(c: ObjectClass) -> &'static str {
    match c {
        ObjectClass::Vehicle => "car",
        ObjectClass::Road => "road",
        ObjectClass::Building => "building",
        ObjectClass::ParkingLot => "parking lot",
        ObjectClass::GreenSpace => "green space",
        ObjectClass::Tree => "tree",
        ObjectClass::SportsField => "sports field",
    }
}

fn phrase(r: Relation) -> &'static str {
    match r {
        Relation::Contains => "on",
        Relation::AdjacentTo => "next to",
        Relation::NearCorner => "near the corner of",
        Relation::NorthOf => "north of",
        Relation::SouthOf => "south of",
        Relation::EastOf => "east of",
        Relation::WestOf => "west of",
        Relation::NortheastOf => "northeast of",
        Relation::NorthwestOf => "northwest of",
        Relation::SoutheastOf => "southeast of",
        Relation::SouthwestOf => "southwest of",
    }
}

/// Text form of a goal that `parse_instruction` reads back.
pub fn render_instruction(goal: &GoalSpec) -> String {
    let mut s = String::from("a");
    if let Some(c) = goal.target_attributes.get("color") {
        s.push(' ');
        s.push_str(c);
    }
    s.push(' ');
    s.push_str(noun(goal.target_class));
    for rc in &goal.relation_chain {
        let name = rc.landmark.as_deref().or(goal.anchor_landmark.as_deref());
        if let Some(name) = name {
            s.push(' ');
            s.push_str(phrase(rc.relation));
            s.push(' ');
            s.push_str(name);
        }
    }
    let extra: Vec<String> = goal
        .target_attributes
        .iter()
        .filter(|(k, _)| k.as_str() != "color")
        .map(|(k, v)| format!("{k} {v}"))
        .collect();
    if !extra.is_empty() {
        s.push_str(" with ");
        s.push_str(&extra.join(" and "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::compile_chain;
    use crate::query::parse_chain;

    const NAMES: [&str; 3] = ["Davey Road", "Main Plaza", "Bragg Road"];

    #[test]
    fn white_car_on_davey_road() {
        let g = parse_instruction("a white car on Davey Road", &NAMES).unwrap();
        assert_eq!(g.target_class, ObjectClass::Vehicle);
        assert_eq!(
            g.target_attributes.get("color").map(String::as_str),
            Some("white")
        );
        assert_eq!(g.anchor_landmark.as_deref(), Some("Davey Road"));
        assert_eq!(
            g.relation_chain,
            vec![RelationConstraint::anchored(Relation::Contains)]
        );
        let printed = r#"[
  {"method": "get_geonode_by_name", "args": ["Davey Road"]},
  {"method": "get_child_nodes", "kwargs": {"relation_type": "contains"}},
  {"method": "filter_by_class", "args": ["vehicle"]},
  {"method": "filter_by_attribute", "args": ["color", "white"]}
]"#;
        assert_eq!(compile_chain(&g).unwrap(), parse_chain(printed).unwrap());
    }

    #[test]
    fn bare_class_and_directions() {
        let g = parse_instruction("a car", &NAMES).unwrap();
        assert_eq!(g.target_class, ObjectClass::Vehicle);
        assert!(g.anchor_landmark.is_none() && g.relation_chain.is_empty());

        let g = parse_instruction("the red building north of Main Plaza", &NAMES).unwrap();
        assert_eq!(g.target_class, ObjectClass::Building);
        assert_eq!(g.relation_chain[0].relation, Relation::NorthOf);

        let g = parse_instruction("a car in front of the Main Plaza", &NAMES).unwrap();
        assert_eq!(g.relation_chain[0].relation, Relation::NorthOf);
        assert_eq!(g.anchor_landmark.as_deref(), Some("Main Plaza"));
        let g = parse_instruction("a tree behind Main Plaza", &NAMES).unwrap();
        assert_eq!(g.relation_chain[0].relation, Relation::SouthOf);
        let g = parse_instruction("a car north-east of Main Plaza.", &NAMES).unwrap();
        assert_eq!(g.relation_chain[0].relation, Relation::NortheastOf);
    }

    #[test]
    fn second_landmark_and_with_clause() {
        let g = parse_instruction(
            "a grey car on Davey Road next to Bragg Road with size medium",
            &NAMES,
        )
        .unwrap();
        assert_eq!(
            g.target_attributes.get("color").map(String::as_str),
            Some("gray")
        );
        assert_eq!(
            g.target_attributes.get("size").map(String::as_str),
            Some("medium")
        );
        assert_eq!(g.relation_chain[1].landmark.as_deref(), Some("Bragg Road"));
        assert_eq!(g.relation_chain[1].relation, Relation::AdjacentTo);
    }

    #[test]
    fn errors_carry_positions() {
        match parse_instruction("white car", &NAMES) {
            Err(QueryError::Parse { position: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_instruction("a boat", &NAMES) {
            Err(QueryError::Parse { position: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_instruction("a car on Elm Street", &NAMES) {
            Err(QueryError::UnknownLandmark { position: 9, name }) => {
                assert_eq!(name, "elm street")
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_instruction("a car with wheels", &NAMES),
            Err(QueryError::Parse { position: 11, .. })
        ));
    }

    #[test]
    fn render_round_trip() {
        let g = parse_instruction(
            "a blue parking lot southwest of Main Plaza with size large",
            &NAMES,
        )
        .unwrap();
        assert_eq!(
            parse_instruction(&render_instruction(&g), &NAMES).unwrap(),
            g
        );
    }
}
