use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{formula, Aggregation, ColumnProfile, MeasureSpec, Origin, ProfileError, NUMERIC_MIN};

/// User corrections read from a JSON file.
///
/// ```json
/// {
///   "measures": [
///     {"name": "men_rate", "formula": "1 - women_expression_rate", "aggregations": ["avg"]},
///     {"attribute": "row_count", "action": "remove"}
///   ],
///   "dimension_names": {"D1": "Channel"},
///   "schema_name": "speaking_time"
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideDocument {
    #[serde(default)]
    pub measures: Vec<MeasureOverride>,
    /// Keyed by default dimension name (`D1`) or by root attribute.
    #[serde(default)]
    pub dimension_names: BTreeMap<String, String>,
    #[serde(default)]
    pub schema_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureOverride {
    #[serde(default)]
    pub attribute: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub formula: Option<String>,
    #[serde(default)]
    pub aggregations: Option<BTreeSet<Aggregation>>,
    #[serde(default)]
    pub action: MeasureAction,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureAction {
    #[default]
    Add,
    Remove,
    Replace,
}

impl OverrideDocument {
    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ProfileError::InvalidOverride(e.to_string()))?;
        if !raw.is_object() {
            return Err(ProfileError::InvalidOverride("expected a JSON object".into()));
        }
        let doc: OverrideDocument =
            serde_json::from_value(raw).map_err(|e| ProfileError::InvalidOverride(e.to_string()))?;
        for (i, m) in doc.measures.iter().enumerate() {
            m.check_shape().map_err(|e| ProfileError::InvalidOverride(format!("measures[{i}]: {e}")))?;
        }
        Ok(doc)
    }
}

impl MeasureOverride {
    fn check_shape(&self) -> Result<(), String> {
        if self.aggregations.as_ref().is_some_and(BTreeSet::is_empty) {
            return Err("aggregations must not be empty".into());
        }
        match self.action {
            MeasureAction::Add => match (&self.attribute, &self.name, &self.formula) {
                (Some(_), None, None) => Ok(()),
                (None, Some(_), Some(_)) => Ok(()),
                _ => Err("add takes either `attribute` or `name` with `formula`".into()),
            },
            MeasureAction::Remove | MeasureAction::Replace => {
                if self.attribute.is_some() == self.name.is_some() {
                    return Err("expected exactly one of `attribute` or `name`".into());
                }
                if self.action == MeasureAction::Remove
                    && (self.formula.is_some() || self.aggregations.is_some())
                {
                    return Err("remove takes only the measure name".into());
                }
                Ok(())
            }
        }
    }

    fn target(&self) -> &str {
        self.attribute
            .as_deref()
            .or(self.name.as_deref())
            .unwrap_or_default()
    }
}

fn check_formula(
    measure: &str,
    text: &str,
    profiles: &[ColumnProfile],
) -> Result<(), ProfileError> {
    let expr = formula::parse(text).map_err(|e| ProfileError::MalformedFormula {
        measure: measure.to_string(),
        offset: e.offset,
        message: e.message,
    })?;
    for attribute in expr.references() {
        let profile = profiles
            .iter()
            .find(|p| p.attribute == attribute)
            .ok_or_else(|| ProfileError::UnknownAttributeInFormula {
                measure: measure.to_string(),
                attribute: attribute.to_string(),
            })?;
        if profile.numeric_fraction < NUMERIC_MIN {
            return Err(ProfileError::NonNumericAttributeInFormula {
                measure: measure.to_string(),
                attribute: attribute.to_string(),
            });
        }
    }
    Ok(())
}

/// Applies the measure edits in document order. Surviving automatic measures
/// come first, then user measures in the order they were added or replaced.
pub fn apply_overrides(
    candidates: &[MeasureSpec],
    overrides: &OverrideDocument,
    profiles: &[ColumnProfile],
) -> Result<Vec<MeasureSpec>, ProfileError> {
    let mut auto: Vec<MeasureSpec> = candidates.to_vec();
    let mut user: Vec<MeasureSpec> = Vec::new();

    for m in &overrides.measures {
        m.check_shape().map_err(ProfileError::InvalidOverride)?;
        let target = m.target().to_string();
        let position = |list: &[MeasureSpec]| list.iter().position(|s| s.name == target);
        match m.action {
            MeasureAction::Add => {
                if position(&auto).is_some() || position(&user).is_some() {
                    return Err(ProfileError::DuplicateMeasure(target));
                }
                let spec = if let Some(text) = &m.formula {
                    if profiles.iter().any(|p| p.attribute == target) {
                        return Err(ProfileError::DuplicateMeasure(target));
                    }
                    check_formula(&target, text, profiles)?;
                    MeasureSpec {
                        name: target,
                        source: None,
                        aggregations: m
                            .aggregations
                            .clone()
                            .unwrap_or_else(|| Aggregation::BASIC.into_iter().collect()),
                        formula: Some(text.clone()),
                        origin: Origin::User,
                    }
                } else {
                    let profile = profiles
                        .iter()
                        .find(|p| p.attribute == target)
                        .ok_or_else(|| ProfileError::UnknownAttribute(target.clone()))?;
                    let default = if profile.numeric_fraction >= NUMERIC_MIN {
                        Aggregation::BASIC.into_iter().collect()
                    } else {
                        BTreeSet::from([Aggregation::Count])
                    };
                    MeasureSpec {
                        name: target.clone(),
                        source: Some(target),
                        aggregations: m.aggregations.clone().unwrap_or(default),
                        formula: None,
                        origin: Origin::User,
                    }
                };
                user.push(spec);
            }
            MeasureAction::Remove => {
                if let Some(i) = position(&auto) {
                    auto.remove(i);
                } else if let Some(i) = position(&user) {
                    user.remove(i);
                } else {
                    return Err(ProfileError::UnknownMeasure(target));
                }
            }
            MeasureAction::Replace => {
                let mut spec = if let Some(i) = position(&auto) {
                    auto.remove(i)
                } else if let Some(i) = position(&user) {
                    user.remove(i)
                } else {
                    return Err(ProfileError::UnknownMeasure(target));
                };
                if let Some(text) = &m.formula {
                    check_formula(&target, text, profiles)?;
                    spec.source = None;
                    spec.formula = Some(text.clone());
                }
                if let Some(aggs) = &m.aggregations {
                    spec.aggregations = aggs.clone();
                }
                spec.origin = Origin::User;
                user.push(spec);
            }
        }
    }

    auto.extend(user);
    if auto.is_empty() {
        return Err(ProfileError::NoCandidateMeasures);
    }
    Ok(auto)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{profile_table, select_measures};
    use crate::table::{CanonicalTable, Provenance};

    fn setup() -> (Vec<ColumnProfile>, Vec<MeasureSpec>) {
        let t = CanonicalTable::new(
            vec!["channel".into(), "women_expression_rate".into(), "speech_rate".into()],
            vec![
                vec!["a".into(), "0.3".into(), "0.5".into()],
                vec!["b".into(), "0.4".into(), "0.6".into()],
                vec!["a".into(), "0.2".into(), "0.7".into()],
            ],
            Provenance::default(),
        )
        .unwrap();
        let profiles = profile_table(&t);
        let candidates = select_measures(&profiles);
        (profiles, candidates)
    }

    fn doc(json: &str) -> OverrideDocument {
        OverrideDocument::from_json(json).unwrap()
    }

    fn names(v: &[MeasureSpec]) -> Vec<&str> {
        v.iter().map(|m| m.name.as_str()).collect()
    }

    #[test]
    fn derived_measure_is_user() {
        let (p, c) = setup();
        let out = apply_overrides(
            &c,
            &doc(r#"{"measures":[{"name":"men_rate","formula":"1 - women_expression_rate"}]}"#),
            &p,
        )
        .unwrap();
        assert_eq!(names(&out), ["women_expression_rate", "speech_rate", "row_count", "men_rate"]);
        assert_eq!(out[3].origin, Origin::User);
        assert_eq!(out[3].formula.as_deref(), Some("1 - women_expression_rate"));
    }

    #[test]
    fn remove_and_replace() {
        let (p, c) = setup();
        let out = apply_overrides(
            &c,
            &doc(
                r#"{"measures":[
                    {"attribute":"row_count","action":"remove"},
                    {"attribute":"women_expression_rate","action":"replace","aggregations":["avg"]},
                    {"attribute":"channel","aggregations":["count"]}
                ]}"#,
            ),
            &p,
        )
        .unwrap();
        assert_eq!(names(&out), ["speech_rate", "women_expression_rate", "channel"]);
        assert_eq!(out[1].aggregations, BTreeSet::from([Aggregation::Avg]));
        assert_eq!(out[1].origin, Origin::User);
    }

    #[test]
    fn formula_errors() {
        let (p, c) = setup();
        let run = |json: &str| apply_overrides(&c, &doc(json), &p).unwrap_err();
        assert!(matches!(
            run(r#"{"measures":[{"name":"x","formula":"rate / "}]}"#),
            ProfileError::MalformedFormula { offset: 7, .. }
        ));
        assert!(matches!(
            run(r#"{"measures":[{"name":"x","formula":"rate / 2"}]}"#),
            ProfileError::UnknownAttributeInFormula { .. }
        ));
        assert!(matches!(
            run(r#"{"measures":[{"name":"x","formula":"channel * 2"}]}"#),
            ProfileError::NonNumericAttributeInFormula { .. }
        ));
        assert!(matches!(
            run(r#"{"measures":[{"attribute":"nope"}]}"#),
            ProfileError::UnknownAttribute(_)
        ));
        assert!(matches!(
            run(r#"{"measures":[{"attribute":"speech_rate"}]}"#),
            ProfileError::DuplicateMeasure(_)
        ));
        assert!(matches!(
            run(r#"{"measures":[{"name":"ghost","action":"remove"}]}"#),
            ProfileError::UnknownMeasure(_)
        ));
    }

    #[test]
    fn everything_removed() {
        let (p, c) = setup();
        let d = doc(
            r#"{"measures":[
                {"attribute":"row_count","action":"remove"},
                {"attribute":"speech_rate","action":"remove"},
                {"attribute":"women_expression_rate","action":"remove"}
            ]}"#,
        );
        assert_eq!(apply_overrides(&c, &d, &p), Err(ProfileError::NoCandidateMeasures));
    }

    #[test]
    fn document_shape_is_validated() {
        for bad in [
            r#"{"measure":[]}"#,
            r#"{"measures":[{"attribute":"a","name":"b"}]}"#,
            r#"{"measures":[{"name":"b"}]}"#,
            r#"{"measures":[{"attribute":"a","aggregations":[]}]}"#,
            r#"{"measures":[{"attribute":"a","aggregations":["median"]}]}"#,
            r#"{"measures":[{"attribute":"a","action":"drop"}]}"#,
            r#"[]"#,
        ] {
            assert!(
                matches!(OverrideDocument::from_json(bad), Err(ProfileError::InvalidOverride(_))),
                "{bad}"
            );
        }
        let d = doc(r#"{"dimension_names":{"D1":"Channel"},"schema_name":"s"}"#);
        assert_eq!(d.dimension_names["D1"], "Channel");
        assert_eq!(d.schema_name.as_deref(), Some("s"));
    }
}
