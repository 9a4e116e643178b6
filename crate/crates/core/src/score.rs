//! Interactive scores: temporal objects, point-to-point relations, and the
//! well-formedness rules that make a score meaningful.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::{Constraint, ConstraintSet};
use crate::duration::DurationSet;
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for ObjectId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Start,
    End,
}

/// A point is identified by its owning object and whether it starts or ends it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRef {
    pub object: ObjectId,
    #[serde(rename = "point")]
    pub kind: PointKind,
}

impl PointRef {
    pub fn start(object: impl Into<ObjectId>) -> Self {
        Self { object: object.into(), kind: PointKind::Start }
    }

    pub fn end(object: impl Into<ObjectId>) -> Self {
        Self { object: object.into(), kind: PointKind::End }
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PointKind::Start => write!(f, "sp({})", self.object),
            PointKind::End => write!(f, "ep({})", self.object),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalObject {
    pub id: ObjectId,
    pub duration: DurationSet,
    pub parent: Option<ObjectId>,
    pub start_action: Option<String>,
    pub end_action: Option<String>,
}

impl TemporalObject {
    pub fn new(id: impl Into<ObjectId>, duration: DurationSet) -> Self {
        Self { id: id.into(), duration, parent: None, start_action: None, end_action: None }
    }

    /// An interactive object has duration exactly `{0}`: its start and end
    /// are one instant, launched by the performer.
    pub fn interactive(id: impl Into<ObjectId>) -> Self {
        Self::new(id, DurationSet::zero())
    }

    pub fn with_parent(mut self, parent: impl Into<ObjectId>) -> Self {
        self.parent = Some(parent.into());
        self
    }

    pub fn with_actions(mut self, start: impl Into<String>, end: impl Into<String>) -> Self {
        self.start_action = Some(start.into());
        self.end_action = Some(end.into());
        self
    }

    pub fn is_interactive(&self) -> bool {
        self.duration.is_singleton_zero()
    }

    pub fn sp(&self) -> PointRef {
        PointRef::start(self.id.clone())
    }

    pub fn ep(&self) -> PointRef {
        PointRef::end(self.id.clone())
    }

    /// Action emitted at the start point; defaults to `<id>.start`.
    pub fn start_action_name(&self) -> String {
        self.start_action.clone().unwrap_or_else(|| format!("{}.start", self.id))
    }

    /// Action emitted at the end point; defaults to `<id>.end`.
    pub fn end_action_name(&self) -> String {
        self.end_action.clone().unwrap_or_else(|| format!("{}.end", self.id))
    }
}

/// `t(to) - t(from) ∈ delta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalRelation {
    pub from: PointRef,
    pub to: PointRef,
    pub delta: DurationSet,
}

impl TemporalRelation {
    pub fn new(from: PointRef, to: PointRef, delta: DurationSet) -> Self {
        Self { from, to, delta }
    }
}

/// Relations are identified by their position in [`Score::relations`].
pub type RelationIndex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Score {
    pub name: String,
    pub objects: Vec<TemporalObject>,
    pub relations: Vec<TemporalRelation>,
}

impl Score {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn with_object(mut self, object: TemporalObject) -> Self {
        self.objects.push(object);
        self
    }

    pub fn with_relation(mut self, from: PointRef, to: PointRef, delta: DurationSet) -> Self {
        self.relations.push(TemporalRelation::new(from, to, delta));
        self
    }

    pub fn object(&self, id: &ObjectId) -> Option<&TemporalObject> {
        self.objects.iter().find(|o| &o.id == id)
    }

    /// Every point of the score: objects by ascending id, start before end.
    pub fn points(&self) -> Vec<PointRef> {
        let mut objects: Vec<&TemporalObject> = self.objects.iter().collect();
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        objects.iter().flat_map(|o| [o.sp(), o.ep()]).collect()
    }

    /// Every duration set used by an object or an explicit relation.
    pub fn duration_sets(&self) -> impl Iterator<Item = &DurationSet> {
        self.objects.iter().map(|o| &o.duration).chain(self.relations.iter().map(|r| &r.delta))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    #[error("relation {relation} joins point {point} to itself")]
    DistinctPoints { relation: RelationIndex, point: String },
    #[error("interactive objects {first} and {second} are forced to occur at the same time")]
    InteractiveSimultaneity { first: ObjectId, second: ObjectId },
    #[error("object {object} has more than one explicit duration relation: {relations:?}")]
    DuplicateDurationRelation { object: ObjectId, relations: Vec<RelationIndex> },
    #[error("parent chain forms a cycle: {objects:?}")]
    HierarchyCycle { objects: Vec<ObjectId> },
    #[error("object id {object} is declared more than once")]
    DuplicateObject { object: ObjectId },
    #[error("relation {relation} refers to unknown object {object}")]
    UnknownObject { relation: RelationIndex, object: ObjectId },
    #[error("object {object} has unknown parent {parent}")]
    UnknownParent { object: ObjectId, parent: ObjectId },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("score is valid");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

/// Checks the well-formedness rules of an interactive score.
pub fn validate_score(score: &Score) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen = BTreeSet::new();
    for o in &score.objects {
        if !seen.insert(&o.id) {
            violations.push(Violation::DuplicateObject { object: o.id.clone() });
        }
    }

    for (i, r) in score.relations.iter().enumerate() {
        for p in [&r.from, &r.to] {
            if !seen.contains(&p.object) {
                violations.push(Violation::UnknownObject { relation: i, object: p.object.clone() });
            }
        }
        if r.from == r.to {
            violations.push(Violation::DistinctPoints { relation: i, point: r.from.to_string() });
        }
    }

    for o in &score.objects {
        if let Some(p) = &o.parent {
            if !seen.contains(p) {
                violations.push(Violation::UnknownParent { object: o.id.clone(), parent: p.clone() });
            }
        }
    }
    if let Err(v) = hierarchy_order(score) {
        violations.push(v);
    }

    violations.extend(interactive_simultaneity(score));

    for o in &score.objects {
        let joined: Vec<RelationIndex> = score
            .relations
            .iter()
            .enumerate()
            .filter(|(_, r)| (r.from == o.sp() && r.to == o.ep()) || (r.from == o.ep() && r.to == o.sp()))
            .map(|(i, _)| i)
            .collect();
        if joined.len() > 1 {
            violations.push(Violation::DuplicateDurationRelation { object: o.id.clone(), relations: joined });
        }
    }

    ValidationReport { violations }
}

/// Partition of the score's points into classes forced to the same instant by
/// `{0}` relations and `{0}` durations, closed transitively.
pub fn zero_distance_classes(score: &Score) -> Vec<Vec<PointRef>> {
    let points = score.points();
    let index: BTreeMap<&PointRef, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut uf = UnionFind::new(points.len());
    for o in &score.objects {
        if o.is_interactive() {
            uf.union(index[&o.sp()], index[&o.ep()]);
        }
    }
    for r in &score.relations {
        if r.delta.is_singleton_zero() {
            if let (Some(&a), Some(&b)) = (index.get(&r.from), index.get(&r.to)) {
                uf.union(a, b);
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<PointRef>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        classes.entry(uf.find(i)).or_default().push(p.clone());
    }
    classes.into_values().collect()
}

fn interactive_simultaneity(score: &Score) -> Vec<Violation> {
    let interactive: BTreeSet<&ObjectId> = score.objects.iter().filter(|o| o.is_interactive()).map(|o| &o.id).collect();
    let mut out = Vec::new();
    for class in zero_distance_classes(score) {
        let members: BTreeSet<&ObjectId> =
            class.iter().map(|p| &p.object).filter(|o| interactive.contains(o)).collect();
        let members: Vec<_> = members.into_iter().collect();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                out.push(Violation::InteractiveSimultaneity { first: (*a).clone(), second: (*b).clone() });
            }
        }
    }
    out
}

/// Objects ordered so that parents precede children, or the first cycle found.
fn hierarchy_order(score: &Score) -> Result<Vec<ObjectId>, Violation> {
    let parent: BTreeMap<&ObjectId, &ObjectId> =
        score.objects.iter().filter_map(|o| o.parent.as_ref().map(|p| (&o.id, p))).collect();
    let mut order = Vec::new();
    let mut done: BTreeSet<&ObjectId> = BTreeSet::new();
    for o in &score.objects {
        let mut chain = Vec::new();
        let mut cur = &o.id;
        loop {
            if done.contains(cur) {
                break;
            }
            if let Some(pos) = chain.iter().position(|c| *c == cur) {
                let objects = chain[pos..].iter().map(|c: &&ObjectId| (*c).clone()).collect();
                return Err(Violation::HierarchyCycle { objects });
            }
            chain.push(cur);
            match parent.get(cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
        for c in chain.into_iter().rev() {
            if done.insert(c) {
                order.push(c.clone());
            }
        }
    }
    Ok(order)
}

/// One duration relation `(sp(o), d(o), ep(o))` per object, by ascending object id.
pub fn derive_implicit_relations(score: &Score) -> Vec<TemporalRelation> {
    let mut objects: Vec<&TemporalObject> = score.objects.iter().collect();
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    objects.into_iter().map(|o| TemporalRelation::new(o.sp(), o.ep(), o.duration.clone())).collect()
}

/// Rewrites parent links as containment relations: a child starts no earlier
/// and ends no later than its parent.
pub fn compile_hierarchy(score: &Score) -> Result<Score, Violation> {
    let order = hierarchy_order(score)?;
    let mut out = score.clone();
    for id in &order {
        let Some(child) = score.object(id) else { continue };
        let Some(parent) = &child.parent else { continue };
        if score.object(parent).is_none() {
            return Err(Violation::UnknownParent { object: id.clone(), parent: parent.clone() });
        }
        out.relations.push(TemporalRelation::new(PointRef::start(parent.clone()), child.sp(), DurationSet::any()));
        out.relations.push(TemporalRelation::new(child.ep(), PointRef::end(parent.clone()), DurationSet::any()));
    }
    for o in &mut out.objects {
        o.parent = None;
    }
    Ok(out)
}

/// The score's temporal constraint: the duration constraints of every object
/// followed by one constraint per explicit relation, over point variables.
pub fn score_constraints(score: &Score) -> ConstraintSet<PointRef> {
    let mut constraints: Vec<Constraint<PointRef>> =
        derive_implicit_relations(score).into_iter().map(|r| Constraint::new(r.from, r.to, r.delta)).collect();
    constraints.extend(score.relations.iter().map(|r| Constraint::new(r.from.clone(), r.to.clone(), r.delta.clone())));
    ConstraintSet::new(score.points(), constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn lights_is_valid() {
        let report = validate_score(&fixtures::lights());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn interactive_objects_joined_by_zero_relation() {
        let s = Score::new("x")
            .with_object(TemporalObject::interactive("a"))
            .with_object(TemporalObject::interactive("b"))
            .with_relation(PointRef::end("a"), PointRef::start("b"), DurationSet::zero());
        let report = validate_score(&s);
        assert_eq!(
            report.violations,
            vec![Violation::InteractiveSimultaneity { first: "a".into(), second: "b".into() }]
        );
    }

    #[test]
    fn transitive_simultaneity_through_static_points() {
        // a = sp(r), sp(r) = sp(g), sp(g) = b
        let s = Score::new("x")
            .with_object(TemporalObject::interactive("a"))
            .with_object(TemporalObject::interactive("b"))
            .with_object(TemporalObject::new("r", DurationSet::range(1, 3)))
            .with_object(TemporalObject::new("g", DurationSet::range(1, 3)))
            .with_relation(PointRef::start("a"), PointRef::start("r"), DurationSet::zero())
            .with_relation(PointRef::start("r"), PointRef::start("g"), DurationSet::zero())
            .with_relation(PointRef::start("g"), PointRef::end("b"), DurationSet::zero());
        assert!(matches!(validate_score(&s).violations.as_slice(), [Violation::InteractiveSimultaneity { .. }]));
    }

    #[test]
    fn zero_relation_to_static_point_is_allowed() {
        let s = Score::new("x")
            .with_object(TemporalObject::interactive("a"))
            .with_object(TemporalObject::new("r", DurationSet::range(1, 3)))
            .with_relation(PointRef::start("a"), PointRef::start("r"), DurationSet::zero());
        assert!(validate_score(&s).is_valid());
    }

    #[test]
    fn relation_from_point_to_itself() {
        let s = Score::new("x").with_object(TemporalObject::new("r", DurationSet::range(1, 3))).with_relation(
            PointRef::start("r"),
            PointRef::start("r"),
            DurationSet::zero(),
        );
        assert_eq!(
            validate_score(&s).violations,
            vec![Violation::DistinctPoints { relation: 0, point: "sp(r)".into() }]
        );
    }

    #[test]
    fn duplicate_duration_relation() {
        let s = Score::new("x")
            .with_object(TemporalObject::new("r", DurationSet::range(1, 5)))
            .with_relation(PointRef::start("r"), PointRef::end("r"), DurationSet::range(2, 3))
            .with_relation(PointRef::start("r"), PointRef::end("r"), DurationSet::range(1, 2));
        assert_eq!(
            validate_score(&s).violations,
            vec![Violation::DuplicateDurationRelation { object: "r".into(), relations: vec![0, 1] }]
        );
        let one = Score::new("x").with_object(TemporalObject::new("r", DurationSet::range(1, 5))).with_relation(
            PointRef::start("r"),
            PointRef::end("r"),
            DurationSet::range(2, 3),
        );
        assert!(validate_score(&one).is_valid());
    }

    #[test]
    fn hierarchy_cycle_and_unknown_references() {
        let s = Score::new("x")
            .with_object(TemporalObject::new("p", DurationSet::range(1, 5)).with_parent("q"))
            .with_object(TemporalObject::new("q", DurationSet::range(1, 5)).with_parent("p"))
            .with_relation(PointRef::start("p"), PointRef::start("z"), DurationSet::zero());
        let v = validate_score(&s).violations;
        assert!(v.iter().any(|v| matches!(v, Violation::HierarchyCycle { .. })));
        assert!(v.contains(&Violation::UnknownObject { relation: 0, object: "z".into() }));
        assert!(matches!(compile_hierarchy(&s), Err(Violation::HierarchyCycle { .. })));
    }

    #[test]
    fn implicit_relations() {
        let s = Score::new("x").with_object(TemporalObject::new("A", DurationSet::range(2, 4)));
        assert_eq!(
            derive_implicit_relations(&s),
            vec![TemporalRelation::new(PointRef::start("A"), PointRef::end("A"), DurationSet::range(2, 4))]
        );
        assert!(derive_implicit_relations(&Score::new("empty")).is_empty());
        assert_eq!(derive_implicit_relations(&fixtures::lights()).len(), 6);
    }

    #[test]
    fn hierarchy_compiles_to_containment() {
        let s = Score::new("x")
            .with_object(TemporalObject::new("c", DurationSet::range(1, 2)).with_parent("p"))
            .with_object(TemporalObject::new("p", DurationSet::range(1, 5)));
        let out = compile_hierarchy(&s).unwrap();
        assert_eq!(out.relations.len(), 2);
        assert!(out.relations.contains(&TemporalRelation::new(
            PointRef::start("p"),
            PointRef::start("c"),
            DurationSet::any()
        )));
        assert!(out.relations.contains(&TemporalRelation::new(
            PointRef::end("c"),
            PointRef::end("p"),
            DurationSet::any()
        )));
        assert!(out.objects.iter().all(|o| o.parent.is_none()));
        assert!(validate_score(&out).is_valid());
        assert_eq!(compile_hierarchy(&out).unwrap(), out);

        let flat = fixtures::seq2();
        assert_eq!(compile_hierarchy(&flat).unwrap(), flat);
    }

    #[test]
    fn constraint_counts() {
        assert_eq!(score_constraints(&fixtures::lights()).len(), 13);
        assert_eq!(score_constraints(&fixtures::seq2()).len(), 3);
        let lone = Score::new("x").with_object(TemporalObject::interactive("a"));
        let cs = score_constraints(&lone);
        assert_eq!(
            cs.constraints,
            vec![Constraint::new(PointRef::start("a"), PointRef::end("a"), DurationSet::zero())]
        );
        assert_eq!(cs.variables.len(), 2);
    }
}
