//! The symbolic function tree.
//!
//! A model is a sum of root links. Every link applies one of three
//! elementary functions to its argument, where the argument is the link's
//! baseline input variable plus the outputs of its children:
//!
//! ```text
//! E1(z) = w * (z^2 + 1)^v        power
//! E2(z) = q * exp(alpha * z)     exponential
//! E3(z) = p * log(z^2 + 1)       logarithm
//! ```
//!
//! Weights are flattened depth-first over the roots, in order, with each
//! link contributing its multiplier (`w`, `q`, `p`) followed by its shape
//! (`v`, `alpha`) when it has one. Optimizers and gradients share this order.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Result, SfnError};

/// Largest `|alpha * z|` an exponential link may see before evaluation is
/// rejected as an overflow.
pub const EXP_ARG_LIMIT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub u64);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionKind {
    /// `w * (z^2 + 1)^v`
    Power,
    /// `q * exp(alpha * z)`
    Exponential,
    /// `p * log(z^2 + 1)`
    Logarithm,
}

impl FunctionKind {
    /// Enumeration order used by the structure search.
    pub const ALL: [FunctionKind; 3] = [
        FunctionKind::Power,
        FunctionKind::Exponential,
        FunctionKind::Logarithm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FunctionKind::Power => "E1",
            FunctionKind::Exponential => "E2",
            FunctionKind::Logarithm => "E3",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "E1" => Some(FunctionKind::Power),
            "E2" => Some(FunctionKind::Exponential),
            "E3" => Some(FunctionKind::Logarithm),
            _ => None,
        }
    }

    pub fn has_shape(self) -> bool {
        !matches!(self, FunctionKind::Logarithm)
    }

    pub fn weight_count(self) -> usize {
        if self.has_shape() {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Multiplier (`w`, `q` or `p`) and, for E1/E2, the shape (`v` or `alpha`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkWeights {
    pub multiplier: f64,
    pub shape: Option<f64>,
}

impl LinkWeights {
    pub fn power(w: f64, v: f64) -> Self {
        LinkWeights {
            multiplier: w,
            shape: Some(v),
        }
    }

    pub fn exponential(q: f64, alpha: f64) -> Self {
        LinkWeights {
            multiplier: q,
            shape: Some(alpha),
        }
    }

    pub fn logarithm(p: f64) -> Self {
        LinkWeights {
            multiplier: p,
            shape: None,
        }
    }

    /// Same multiplier/shape layout, multiplier set to zero.
    pub fn silent(kind: FunctionKind) -> Self {
        LinkWeights {
            multiplier: 0.0,
            shape: kind.has_shape().then_some(1.0),
        }
    }

    fn validate(&self, kind: FunctionKind) -> Result<()> {
        if kind.has_shape() != self.shape.is_some() {
            return Err(SfnError::InvalidWeights(format!(
                "{kind} takes {} weight(s)",
                kind.weight_count()
            )));
        }
        if !self.multiplier.is_finite() || !self.shape.unwrap_or(0.0).is_finite() {
            return Err(SfnError::InvalidWeights("weights must be finite".into()));
        }
        Ok(())
    }
}

/// Value of an elementary function and its partial derivatives at one
/// argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Local {
    pub value: f64,
    /// d value / d argument
    pub d_arg: f64,
    /// d value / d multiplier
    pub d_multiplier: f64,
    /// d value / d shape (zero for E3)
    pub d_shape: f64,
}

pub(crate) fn apply(kind: FunctionKind, weights: &LinkWeights, z: f64) -> Option<f64> {
    let m = weights.multiplier;
    let s = weights.shape.unwrap_or(0.0);
    let y = match kind {
        FunctionKind::Power => m * (z * z + 1.0).powf(s),
        FunctionKind::Exponential => {
            if (s * z).abs() > EXP_ARG_LIMIT {
                return None;
            }
            m * (s * z).exp()
        }
        FunctionKind::Logarithm => m * (z * z + 1.0).ln(),
    };
    y.is_finite().then_some(y)
}

pub(crate) fn local(kind: FunctionKind, weights: &LinkWeights, z: f64) -> Option<Local> {
    let m = weights.multiplier;
    let s = weights.shape.unwrap_or(0.0);
    let base = z * z + 1.0;
    let out = match kind {
        FunctionKind::Power => {
            let pw = base.powf(s);
            Local {
                value: m * pw,
                d_arg: 2.0 * m * s * z * base.powf(s - 1.0),
                d_multiplier: pw,
                d_shape: m * pw * base.ln(),
            }
        }
        FunctionKind::Exponential => {
            if (s * z).abs() > EXP_ARG_LIMIT {
                return None;
            }
            let e = (s * z).exp();
            Local {
                value: m * e,
                d_arg: m * s * e,
                d_multiplier: e,
                d_shape: m * z * e,
            }
        }
        FunctionKind::Logarithm => {
            let l = base.ln();
            Local {
                value: m * l,
                d_arg: 2.0 * m * z / base,
                d_multiplier: l,
                d_shape: 0.0,
            }
        }
    };
    let finite = out.value.is_finite()
        && out.d_arg.is_finite()
        && out.d_multiplier.is_finite()
        && out.d_shape.is_finite();
    finite.then_some(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionLink {
    id: LinkId,
    kind: FunctionKind,
    pub(crate) weights: LinkWeights,
    baseline_input: usize,
    pub(crate) children: Vec<FunctionLink>,
}

impl FunctionLink {
    pub fn id(&self) -> LinkId {
        self.id
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn weights(&self) -> &LinkWeights {
        &self.weights
    }

    pub fn baseline_input(&self) -> usize {
        self.baseline_input
    }

    pub fn children(&self) -> &[FunctionLink] {
        &self.children
    }

    /// Evaluates this link (and its subtree) at `input`.
    pub fn eval(&self, input: &[f64]) -> Result<f64> {
        let mut z = input[self.baseline_input];
        for child in &self.children {
            z += child.eval(input)?;
        }
        apply(self.kind, &self.weights, z).ok_or(SfnError::NonFiniteResult { link: self.id })
    }

    fn count_weights(&self) -> usize {
        self.kind.weight_count()
            + self
                .children
                .iter()
                .map(FunctionLink::count_weights)
                .sum::<usize>()
    }

    fn depth(&self) -> usize {
        1 + self.children.iter().map(FunctionLink::depth).max().unwrap_or(0)
    }

    fn push_weights(&self, out: &mut Vec<f64>) {
        out.push(self.weights.multiplier);
        if let Some(s) = self.weights.shape {
            out.push(s);
        }
        for child in &self.children {
            child.push_weights(out);
        }
    }

    fn pull_weights(&mut self, src: &mut std::slice::Iter<'_, f64>) {
        self.weights.multiplier = *src.next().expect("length checked");
        if let Some(s) = self.weights.shape.as_mut() {
            *s = *src.next().expect("length checked");
        }
        for child in &mut self.children {
            child.pull_weights(src);
        }
    }

    fn find(&self, id: LinkId) -> Option<&FunctionLink> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    fn find_mut(&mut self, id: LinkId) -> Option<&mut FunctionLink> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }

    fn depth_of(&self, id: LinkId, here: usize) -> Option<usize> {
        if self.id == id {
            return Some(here);
        }
        self.children.iter().find_map(|c| c.depth_of(id, here + 1))
    }

    fn remove_descendant(&mut self, id: LinkId) -> Option<FunctionLink> {
        if let Some(pos) = self.children.iter().position(|c| c.id == id) {
            return Some(self.children.remove(pos));
        }
        self.children.iter_mut().find_map(|c| c.remove_descendant(id))
    }

    fn render(&self, out: &mut String) {
        let arg = self.render_arg();
        let m = number(self.weights.multiplier);
        match self.kind {
            FunctionKind::Power => {
                let v = number(self.weights.shape.unwrap_or(0.0));
                out.push_str(&format!("{m}*({arg}^2+1)^{v}"));
            }
            FunctionKind::Exponential => {
                let a = number(self.weights.shape.unwrap_or(0.0));
                out.push_str(&format!("{m}*exp({a}*{arg})"));
            }
            FunctionKind::Logarithm => {
                out.push_str(&format!("{m}*log({arg}^2+1)"));
            }
        }
    }

    fn render_arg(&self) -> String {
        let base = format!("x{}", self.baseline_input);
        if self.children.is_empty() {
            return base;
        }
        let mut s = format!("({base}");
        for child in &self.children {
            s.push_str(" + ");
            child.render(&mut s);
        }
        s.push(')');
        s
    }
}

// Shortest representation that parses back to the same f64.
fn number(x: f64) -> String {
    if x.is_sign_negative() {
        format!("({x})")
    } else {
        format!("{x}")
    }
}

/// Where a new link is attached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parent {
    Root,
    Link(LinkId),
}

impl fmt::Display for Parent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parent::Root => f.write_str("root"),
            Parent::Link(id) => write!(f, "{id}"),
        }
    }
}

/// One link as seen during a preorder walk.
#[derive(Clone, Copy, Debug)]
pub struct LinkView<'a> {
    pub link: &'a FunctionLink,
    pub parent: Parent,
    /// Roots sit at depth 1.
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SfnModel {
    input_arity: usize,
    max_depth: usize,
    roots: Vec<FunctionLink>,
    next_id: u64,
}

impl SfnModel {
    pub fn new(input_arity: usize, max_depth: usize) -> Result<Self> {
        if input_arity == 0 {
            return Err(SfnError::InvalidConfig("input arity must be positive".into()));
        }
        if max_depth == 0 {
            return Err(SfnError::InvalidConfig("max depth must be positive".into()));
        }
        Ok(SfnModel {
            input_arity,
            max_depth,
            roots: Vec::new(),
            next_id: 0,
        })
    }

    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn roots(&self) -> &[FunctionLink] {
        &self.roots
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Sum of the root links at `input`; an empty model is the zero function.
    pub fn eval(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.input_arity {
            return Err(SfnError::LengthMismatch {
                expected: self.input_arity,
                got: input.len(),
            });
        }
        let mut y = 0.0;
        for root in &self.roots {
            y += root.eval(input)?;
        }
        Ok(y)
    }

    pub fn predict(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        inputs.iter().map(|x| self.eval(x)).collect()
    }

    pub fn add_link(
        &mut self,
        parent: Parent,
        kind: FunctionKind,
        baseline_input: usize,
        weights: LinkWeights,
    ) -> Result<LinkId> {
        if baseline_input >= self.input_arity {
            return Err(SfnError::InvalidBaseline {
                index: baseline_input,
                arity: self.input_arity,
            });
        }
        weights.validate(kind)?;
        let depth = match parent {
            Parent::Root => 1,
            Parent::Link(id) => self.depth_of(id).ok_or(SfnError::InvalidParent(id))? + 1,
        };
        if depth > self.max_depth {
            return Err(SfnError::DepthExceeded {
                depth,
                max_depth: self.max_depth,
            });
        }
        let id = LinkId(self.next_id);
        self.next_id += 1;
        let link = FunctionLink {
            id,
            kind,
            weights,
            baseline_input,
            children: Vec::new(),
        };
        match parent {
            Parent::Root => self.roots.push(link),
            Parent::Link(pid) => self
                .find_mut(pid)
                .expect("depth lookup found the parent")
                .children
                .push(link),
        }
        Ok(id)
    }

    /// Detaches `id` together with its whole subtree.
    pub fn remove_link(&mut self, id: LinkId) -> Result<FunctionLink> {
        if let Some(pos) = self.roots.iter().position(|r| r.id == id) {
            return Ok(self.roots.remove(pos));
        }
        self.roots
            .iter_mut()
            .find_map(|r| r.remove_descendant(id))
            .ok_or(SfnError::UnknownLink(id))
    }

    pub fn find(&self, id: LinkId) -> Option<&FunctionLink> {
        self.roots.iter().find_map(|r| r.find(id))
    }

    fn find_mut(&mut self, id: LinkId) -> Option<&mut FunctionLink> {
        self.roots.iter_mut().find_map(|r| r.find_mut(id))
    }

    /// Depth of link `id`, roots being 1.
    pub fn depth_of(&self, id: LinkId) -> Option<usize> {
        self.roots.iter().find_map(|r| r.depth_of(id, 1))
    }

    pub fn set_weights(&mut self, id: LinkId, weights: LinkWeights) -> Result<()> {
        let link = self.find_mut(id).ok_or(SfnError::UnknownLink(id))?;
        weights.validate(link.kind)?;
        link.weights = weights;
        Ok(())
    }

    /// All links in canonical (depth-first, roots in order) order.
    pub fn links(&self) -> Vec<LinkView<'_>> {
        fn walk<'a>(link: &'a FunctionLink, parent: Parent, depth: usize, out: &mut Vec<LinkView<'a>>) {
            out.push(LinkView { link, parent, depth });
            for child in &link.children {
                walk(child, Parent::Link(link.id), depth + 1, out);
            }
        }
        let mut out = Vec::new();
        for root in &self.roots {
            walk(root, Parent::Root, 1, &mut out);
        }
        out
    }

    pub fn link_count(&self) -> usize {
        self.links().len()
    }

    pub fn count_weights(&self) -> usize {
        self.roots.iter().map(FunctionLink::count_weights).sum()
    }

    /// Longest root-to-leaf chain of links; zero for an empty model.
    pub fn depth(&self) -> usize {
        self.roots.iter().map(FunctionLink::depth).max().unwrap_or(0)
    }

    pub fn flatten_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_weights());
        for root in &self.roots {
            root.push_weights(&mut out);
        }
        out
    }

    pub fn load_weights(&mut self, weights: &[f64]) -> Result<()> {
        let expected = self.count_weights();
        if weights.len() != expected {
            return Err(SfnError::LengthMismatch {
                expected,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(SfnError::InvalidWeights("weights must be finite".into()));
        }
        let mut it = weights.iter();
        for root in &mut self.roots {
            root.pull_weights(&mut it);
        }
        Ok(())
    }

    /// Infix rendering of the model, e.g.
    /// `1.25*(x0^2+1)^0.5 + 0.3*log((x1 + 0.9*exp(1.1*x1))^2+1)`.
    pub fn render_symbolic(&self) -> String {
        if self.roots.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, root) in self.roots.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            root.render(&mut s);
        }
        s
    }

    /// Line-oriented serialization, see [`SfnModel::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "sfn-model inputs={} max_depth={} next_id={}\n",
            self.input_arity, self.max_depth, self.next_id
        );
        for view in self.links() {
            let link = view.link;
            let parent = match view.parent {
                Parent::Root => "-".to_string(),
                Parent::Link(id) => id.0.to_string(),
            };
            s.push_str(&format!(
                "{} {} {} {} {}",
                link.id.0, parent, link.kind, link.baseline_input, link.weights.multiplier
            ));
            if let Some(shape) = link.weights.shape {
                s.push_str(&format!(" {shape}"));
            }
            s.push('\n');
        }
        s
    }

    /// Parses the output of [`SfnModel::to_text`]:
    ///
    /// ```text
    /// sfn-model inputs=<arity> max_depth=<depth> next_id=<n>
    /// <id> <parent id or -> <E1|E2|E3> <baseline index> <multiplier> [shape]
    /// ```
    ///
    /// Links appear in preorder, so every parent precedes its children.
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| SfnError::Parse {
            path: "<model>".into(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| err(1, "empty model file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("sfn-model") {
            return Err(err(hline, "expected `sfn-model` header".into()));
        }
        let (mut arity, mut max_depth, mut next_id) = (None, None, None);
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| err(hline, format!("bad header field `{f}`")))?;
            let v: u64 = v.parse().map_err(|_| err(hline, format!("bad value in `{f}`")))?;
            match k {
                "inputs" => arity = Some(v as usize),
                "max_depth" => max_depth = Some(v as usize),
                "next_id" => next_id = Some(v),
                _ => return Err(err(hline, format!("unknown header field `{k}`"))),
            }
        }
        let mut model = SfnModel::new(
            arity.ok_or_else(|| err(hline, "missing inputs=".into()))?,
            max_depth.ok_or_else(|| err(hline, "missing max_depth=".into()))?,
        )?;
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() < 5 || parts.len() > 6 {
                return Err(err(ln, format!("expected 5 or 6 fields, got {}", parts.len())));
            }
            let id: u64 = parts[0].parse().map_err(|_| err(ln, "bad link id".into()))?;
            let parent = match parts[1] {
                "-" => Parent::Root,
                p => Parent::Link(LinkId(p.parse().map_err(|_| err(ln, "bad parent id".into()))?)),
            };
            let kind = FunctionKind::from_label(parts[2])
                .ok_or_else(|| err(ln, format!("unknown kind `{}`", parts[2])))?;
            let baseline: usize = parts[3]
                .parse()
                .map_err(|_| err(ln, "bad baseline index".into()))?;
            let nums: Vec<f64> = parts[4..]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(ln, "bad weight".into()))?;
            let weights = LinkWeights {
                multiplier: nums[0],
                shape: nums.get(1).copied(),
            };
            if model.find(LinkId(id)).is_some() {
                return Err(err(ln, format!("duplicate link id {id}")));
            }
            model.next_id = id;
            model
                .add_link(parent, kind, baseline, weights)
                .map_err(|e| err(ln, e.to_string()))?;
        }
        let max_seen = model.links().iter().map(|v| v.link.id.0 + 1).max().unwrap_or(0);
        model.next_id = next_id.unwrap_or(0).max(max_seen);
        Ok(model)
    }

    /// Short digest of structure and exact weight bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_text().as_bytes());
        for w in self.flatten_weights() {
            h.update(w.to_bits().to_le_bytes());
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for SfnModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_symbolic())
    }
}
