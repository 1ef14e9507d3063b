//! Sessions: build the system of a spec once and answer its queries.

use std::collections::BTreeMap;

use diffiety_core::diffiety::{Diffiety, Filtration, OdeSystem, ResolvedEquation};
use diffiety_core::involution::{
    cartan_test, graded_dims, hilbert_fit, injectivity_window, HilbertFit, InjectivityReport, SolvedSystem,
};
use diffiety_core::standard::{descending_chain, first_task, growth_classifier, standard_basis, Growth};
use diffiety_core::symkernel::{Branch, CaseContext, CaseError, Coordinate, Expr};
use diffiety_core::symmetry::{
    decompose_variation, infinitesimal_conditions, variation_from_data, verify_symmetry, verify_variation,
    wave_symmetry, wave_symmetry_single, Morphism, SymmetryVerdict, VariationData,
};
use diffiety_core::Error as CoreError;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dsl::{parse_expr_at, DslError, Located, ProblemSpec, Query};
use crate::report::{omega_text, ForkEntry, QueryResult, Report, Verdict};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_MAX_ORDER: usize = 8;
pub const DEFAULT_WAVE_ORDER: usize = 3;
pub const DEFAULT_GROWTH_DEPTH: usize = 4;

/// Analyses a query may name.
pub const ANALYSES: &[&str] = &[
    "analyze",
    "standard-basis",
    "ker-chain",
    "growth",
    "hilbert",
    "variations",
    "check-symmetry",
    "wave",
    "cartan",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error("argument {flag}: {source}")]
    Argument { flag: String, source: DslError },
    #[error("{module}: {query}: {source}")]
    Core {
        module: &'static str,
        query: String,
        source: CoreError,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Clone, Debug)]
pub struct Options {
    /// Overrides the `order=` of every query.
    pub order: Option<usize>,
    pub seed: u64,
    pub case: Option<Vec<Branch>>,
    pub max_order: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            order: None,
            seed: 0,
            case: None,
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

fn module_of(analysis: &str) -> &'static str {
    match analysis {
        "standard-basis" | "ker-chain" | "growth" => "standard",
        "hilbert" | "cartan" => "involution",
        "variations" | "check-symmetry" | "wave" => "symmetry",
        _ => "diffiety",
    }
}

/// Builds the diffiety of a spec; `None` for PDE systems, which only admit the Cartan test.
pub fn build_diffiety(spec: &ProblemSpec) -> Result<Option<Diffiety>, CliError> {
    let core = |source| CliError::Core {
        module: "diffiety",
        query: "build".into(),
        source,
    };
    let a = spec.assumption_set();
    if spec.equations.is_empty() {
        let om = if spec.n() == 1 {
            Diffiety::contact(spec.m())
        } else {
            Diffiety::contact_multi(spec.n(), spec.m()).map_err(core)?
        };
        return Ok(Some(om.with_name(&spec.name).with_assumptions(a)));
    }
    if spec.n() > 1 {
        return Ok(None);
    }
    let equations = spec
        .equations
        .iter()
        .map(|e| ResolvedEquation {
            dep: e.dep(),
            order: e.order().order(),
            rhs: e.rhs.clone(),
        })
        .collect();
    let ode = OdeSystem {
        name: spec.name.clone(),
        dependents: spec.m(),
        equations,
        assumptions: a,
    };
    Diffiety::from_resolved_ode(&ode).map(Some).map_err(core)
}

/// The first-order system `w^j_i = f` of a spec for the Cartan test.
pub fn solved_system(spec: &ProblemSpec) -> Result<SolvedSystem, CliError> {
    let mut s = SolvedSystem::new(spec.n(), spec.m());
    for e in &spec.equations {
        let order = e.order();
        let dirs: Vec<usize> = (0..spec.n()).filter(|&i| order.get(i) > 0).collect();
        if order.order() != 1 || dirs.len() != 1 {
            return Err(CliError::Usage(format!(
                "the Cartan test needs first-order equations; {} has order {}",
                e.lhs,
                order.order()
            )));
        }
        s = s.equation(dirs[0] + 1, e.dep(), e.rhs.clone());
    }
    Ok(s)
}

/// What one window run of a query produced.
struct Outcome {
    verdict: Verdict,
    data: BTreeMap<String, Value>,
    /// Window-independent summary compared across `L` and `L + 1`.
    key: Value,
}

impl Outcome {
    fn new(verdict: Verdict, data: Vec<(&str, Value)>, key: Value) -> Self {
        Outcome {
            verdict,
            data: data.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            key,
        }
    }
}

enum Step {
    Done(Outcome),
    Escalate(String),
}

pub struct Session<'a> {
    spec: &'a ProblemSpec,
    om: Option<Diffiety>,
    opts: Options,
}

impl<'a> Session<'a> {
    pub fn new(spec: &'a ProblemSpec, opts: Options) -> Result<Self, CliError> {
        Ok(Session {
            spec,
            om: build_diffiety(spec)?,
            opts,
        })
    }

    pub fn diffiety(&self) -> Option<&Diffiety> {
        self.om.as_ref()
    }

    /// Analyses run by a bare `analyze`.
    pub fn default_analyses(&self) -> Vec<&'static str> {
        match &self.om {
            None => vec!["cartan"],
            Some(om) if om.n() == 1 => vec!["standard-basis", "ker-chain", "hilbert", "growth"],
            Some(_) => vec!["ker-chain", "hilbert"],
        }
    }

    /// Replaces `analyze` queries by the default analyses with the same arguments.
    pub fn expand(&self, queries: &[Query]) -> Vec<Query> {
        let mut out = Vec::new();
        for q in queries {
            if q.analysis.value == "analyze" {
                for a in self.default_analyses() {
                    out.push(Query {
                        analysis: Located {
                            value: a.to_string(),
                            ..q.analysis.clone()
                        },
                        args: q.args.clone(),
                    });
                }
            } else {
                out.push(q.clone());
            }
        }
        if out.is_empty() {
            out = self.expand(&[Query {
                analysis: Located {
                    value: "analyze".into(),
                    line: 0,
                    col: 0,
                },
                args: vec![],
            }]);
        }
        out
    }

    /// Runs the queries concurrently and assembles the report in query order.
    pub fn run(&self, queries: &[Query]) -> Result<Report, CliError> {
        let queries = self.expand(queries);
        for q in &queries {
            if !ANALYSES.contains(&q.analysis.value.as_str()) {
                return Err(DslError::Semantic {
                    line: q.analysis.line,
                    col: q.analysis.col,
                    msg: format!("unknown analysis `{}`", q.analysis.value),
                }
                .into());
            }
        }
        let outcomes: Vec<Result<(QueryResult, Vec<ForkEntry>), CliError>> = std::thread::scope(|s| {
            let handles: Vec<_> = queries
                .iter()
                .map(|q| {
                    std::thread::Builder::new()
                        .stack_size(64 << 20)
                        .spawn_scoped(s, move || self.run_query(q))
                        .expect("spawn query thread")
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect()
        });
        let mut results = Vec::new();
        let mut forks = Vec::new();
        for o in outcomes {
            let (r, f) = o?;
            results.push(r);
            forks.extend(f);
        }
        Ok(Report {
            system: self.spec.name.clone(),
            window: self
                .opts
                .order
                .unwrap_or_else(|| results.iter().map(|r| r.window).max().unwrap_or(DEFAULT_ORDER)),
            assumptions: self.spec.assumptions.iter().map(Expr::to_string).collect(),
            stable: results.iter().all(|r| r.stable),
            results,
            forks,
        })
    }

    fn ctx(&self) -> CaseContext {
        let a = self
            .om
            .as_ref()
            .map_or_else(|| self.spec.assumption_set(), |om| om.assumptions().clone());
        let c = CaseContext::new(a);
        match &self.opts.case {
            Some(p) => c.with_path(p.clone()),
            None => c,
        }
    }

    fn om(&self, q: &Query) -> Result<&Diffiety, CliError> {
        self.om.as_ref().ok_or_else(|| {
            CliError::Usage(format!(
                "{} needs one independent variable or a system without equations",
                q.analysis.value
            ))
        })
    }

    fn om1(&self, q: &Query) -> Result<&Diffiety, CliError> {
        let om = self.om(q)?;
        if om.n() != 1 {
            return Err(CliError::Usage(format!(
                "{} needs one independent variable",
                q.analysis.value
            )));
        }
        Ok(om)
    }

    fn expr(&self, v: &Located<String>, key: &str, placeholder: Option<&str>) -> Result<Expr, CliError> {
        let mut scope = self.spec.scope();
        if let Some(p) = placeholder {
            scope = scope.with_placeholder(p);
        }
        let (line, col) = if v.line == 0 { (1, 1) } else { (v.line, v.col) };
        parse_expr_at(&v.value, &scope, line, col).map_err(|e| {
            if v.line == 0 {
                CliError::Argument {
                    flag: format!("--{key}"),
                    source: e,
                }
            } else {
                e.into()
            }
        })
    }

    fn exprs(&self, q: &Query, key: &str) -> Result<Vec<Expr>, CliError> {
        q.get_all(key).into_iter().map(|v| self.expr(v, key, None)).collect()
    }

    fn number(&self, q: &Query, key: &str) -> Result<Option<usize>, CliError> {
        q.get(key)
            .map(|v| {
                v.value.parse::<usize>().map_err(|_| {
                    CliError::Dsl(DslError::Semantic {
                        line: v.line,
                        col: v.col,
                        msg: format!("`{key}` needs a nonnegative integer"),
                    })
                })
            })
            .transpose()
    }

    fn run_query(&self, q: &Query) -> Result<(QueryResult, Vec<ForkEntry>), CliError> {
        let name = q.analysis.value.as_str();
        let default = if name == "wave" { DEFAULT_WAVE_ORDER } else { DEFAULT_ORDER };
        let l0 = match self.opts.order {
            Some(l) => l,
            None => self.number(q, "order")?.unwrap_or(default),
        };
        let seed = match self.number(q, "seed")? {
            Some(s) => s as u64,
            None => self.opts.seed,
        };
        match name {
            "standard-basis" => {
                let om = self.om1(q)?;
                self.windowed(q, l0, |l, c| standard_basis_outcome(om, l, seed, c))
            }
            "ker-chain" => {
                let om = self.om(q)?;
                self.windowed(q, l0, |l, c| ker_chain_outcome(om, l, seed, c))
            }
            "growth" => {
                let om = self.om1(q)?;
                let depth = self.number(q, "depth")?.unwrap_or(DEFAULT_GROWTH_DEPTH);
                let extra: Vec<Coordinate> = q
                    .get_all("coord")
                    .into_iter()
                    .map(|v| {
                        self.expr(v, "coord", None)?.as_coord().filter(|c| om.contains(c)).ok_or_else(|| {
                            CliError::Usage(format!("`{}` is not a chart coordinate", v.value))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                self.windowed(q, l0, |l, c| growth_outcome(om, l, seed, depth, &extra, c))
            }
            "hilbert" => {
                let om = self.om(q)?;
                self.windowed(q, l0, |l, c| hilbert_outcome(om, l, c))
            }
            "variations" => {
                let om = self.om1(q)?;
                let z = match q.get("z") {
                    Some(v) => self.expr(v, "z", Some("z"))?,
                    None => Expr::coord(Coordinate::plain("z")),
                };
                let p = self.exprs(q, "p")?;
                let zk = self.exprs(q, "zk")?;
                self.windowed(q, l0, |l, c| variations_outcome(om, &z, &p, &zk, l, seed, c))
            }
            "check-symmetry" => {
                let om = self.om1(q)?;
                let (f, seeds) = self.morphism_data(q)?;
                self.windowed(q, l0, |l, c| symmetry_outcome(om, &f, &seeds, l, seed, c))
            }
            "wave" => {
                let om = self.om1(q)?;
                let ws = self.exprs(q, "w")?;
                let fwd = self.exprs(q, "fwd")?;
                let bwd = self.exprs(q, "bwd")?;
                if ws.is_empty() {
                    return Err(CliError::Usage("wave needs at least one `w=` expression".into()));
                }
                self.windowed(q, l0, |l, c| wave_outcome(om, &ws, &fwd, &bwd, l, c))
            }
            "cartan" => {
                let s = solved_system(self.spec)?;
                self.windowed(q, l0, |_, c| cartan_outcome(&s, c))
            }
            other => unreachable!("analysis {other} was validated"),
        }
    }

    /// Reads `x = …` and per-dependent seeds from the query arguments.
    fn morphism_data(&self, q: &Query) -> Result<(Expr, Vec<(Coordinate, Expr)>), CliError> {
        let mut f = None;
        let mut seeds = Vec::new();
        for (k, v) in &q.args {
            if k == "order" || k == "seed" {
                continue;
            }
            let target = self.expr(
                &Located {
                    value: k.clone(),
                    line: v.line,
                    col: v.col,
                },
                k,
                None,
            )?;
            let value = self.expr(v, k, None)?;
            match target.as_coord() {
                Some(c) if c.is_indep() => f = Some(value),
                Some(c @ Coordinate::Jet { .. }) if c.jet_order() == 0 => seeds.push((c, value)),
                _ => return Err(CliError::Usage(format!("`{k}` is not x or a dependent variable"))),
            }
        }
        let f = f.ok_or_else(|| CliError::Usage("the map needs an image for the independent variable".into()))?;
        Ok((f, seeds))
    }

    /// Runs at `L`, escalating on window failures, then reruns at `L + 1` for stability.
    fn windowed<F>(&self, q: &Query, l0: usize, f: F) -> Result<(QueryResult, Vec<ForkEntry>), CliError>
    where
        F: Fn(usize, &mut CaseContext) -> Result<Step, CoreError>,
    {
        let name = q.analysis.value.clone();
        let max = self.opts.max_order.max(l0);
        let core = |source| CliError::Core {
            module: module_of(&name),
            query: name.clone(),
            source,
        };
        let mut l = l0;
        loop {
            let mut ctx = self.ctx();
            let step = match f(l, &mut ctx) {
                Ok(s) => s,
                Err(CoreError::WindowEscalation(m)) => Step::Escalate(m),
                Err(CoreError::Case(e @ CaseError::ZeroBranch { .. })) => {
                    let data = vec![("note", Value::from(e.to_string()))];
                    let out = Outcome::new(Verdict::Inconclusive, data, Value::Null);
                    return Ok(self.result(&name, l, out, false, &ctx));
                }
                Err(e) => return Err(core(e)),
            };
            match step {
                Step::Done(out) => {
                    let stable = l < max && {
                        let mut c2 = self.ctx();
                        match f(l + 1, &mut c2) {
                            Ok(Step::Done(o2)) => o2.verdict == out.verdict && o2.key == out.key,
                            _ => false,
                        }
                    };
                    return Ok(self.result(&name, l, out, stable, &ctx));
                }
                Step::Escalate(m) => {
                    if l >= max {
                        let data = vec![("note", Value::from(format!("inconclusive at L={l}: {m}")))];
                        let out = Outcome::new(Verdict::Inconclusive, data, Value::Null);
                        return Ok(self.result(&name, l, out, false, &ctx));
                    }
                    l += 1;
                }
            }
        }
    }

    fn result(
        &self,
        name: &str,
        window: usize,
        out: Outcome,
        stable: bool,
        ctx: &CaseContext,
    ) -> (QueryResult, Vec<ForkEntry>) {
        let forks = ctx
            .forks()
            .iter()
            .map(|f| ForkEntry {
                query: name.to_string(),
                pivot: f.pivot.to_string(),
                taken: match f.taken {
                    Branch::NonZero => "nonzero".into(),
                    Branch::Zero => "zero".into(),
                },
                site: f.site.clone(),
            })
            .collect();
        let r = QueryResult {
            query: name.to_string(),
            verdict: out.verdict,
            window,
            assumptions: ctx.assumptions().declared().iter().map(Expr::to_string).collect(),
            stable,
            data: out.data,
        };
        (r, forks)
    }
}

fn strings<T: ToString>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|x| Value::from(x.to_string())).collect())
}

fn standard_basis_outcome(om: &Diffiety, l: usize, seed: u64, c: &mut CaseContext) -> Result<Step, CoreError> {
    let b = standard_basis(om, l, seed, c)?;
    let taus: Vec<String> = b.taus.iter().map(omega_text).collect();
    let mut pis = Vec::new();
    for (j, s) in b.seeds.iter().enumerate() {
        let mut shifts = Vec::new();
        for k in 0..=2 {
            shifts.push(omega_text(&b.pi(om, j, k)?));
        }
        pis.push(json!({ "j": j + 1, "level": s.level, "pi": shifts }));
    }
    let cert = &b.certificate;
    let certificate = json!({
        "tau_invariant": cert.tau_invariant,
        "tau_frobenius": cert.tau_frobenius,
        "pi_structure": cert.pi_structure,
        "spans_window": cert.spans_window,
    });
    let key = json!([b.k(), b.mu(), taus, pis]);
    let data = vec![
        ("K", Value::from(b.k())),
        ("mu", Value::from(b.mu())),
        ("tau", Value::from(taus)),
        ("pi", Value::from(pis)),
        ("certificate", certificate),
        ("chain_dims", Value::from(b.chain.dims())),
    ];
    Ok(Step::Done(Outcome::new(Verdict::from_bool(cert.holds()), data, key)))
}

fn ker_chain_outcome(om: &Diffiety, l: usize, seed: u64, c: &mut CaseContext) -> Result<Step, CoreError> {
    let (first, x_independent) = match first_task(om, l, seed, c) {
        Ok(t) => (t.chain, true),
        Err(CoreError::NotGeneric(_)) => {
            let x = if om.n() == 1 {
                om.d().clone()
            } else {
                diffiety_core::standard::generic_field(om, seed, 1)
            };
            (descending_chain(om, &x, l, c)?, false)
        }
        Err(e) => return Err(e),
    };
    let dims = first.dims();
    let strict = dims.windows(2).all(|w| w[1] < w[0]);
    let k = first.stationary().dim();
    let data = vec![
        ("dims", Value::from(dims.clone())),
        ("depth", Value::from(first.depth)),
        ("K", Value::from(k)),
        ("field", Value::from(first.field.clone())),
        ("strict_descent", Value::from(strict)),
        ("x_independent", Value::from(x_independent)),
    ];
    let key = json!([dims, strict, x_independent]);
    Ok(Step::Done(Outcome::new(Verdict::from_bool(strict && x_independent), data, key)))
}

fn growth_outcome(
    om: &Diffiety,
    l: usize,
    seed: u64,
    depth: usize,
    extra: &[Coordinate],
    c: &mut CaseContext,
) -> Result<Step, CoreError> {
    let b = standard_basis(om, l, seed, c)?;
    let mut rows = Vec::new();
    let mut ok = true;
    let mut add = |role: &str, form: &diffiety_core::geometry::OneForm, c: &mut CaseContext| -> Result<(), CoreError> {
        let g = growth_classifier(form, om, depth, c)?;
        let bounded = g.class == Growth::Bounded;
        match role {
            "tau" => ok &= bounded,
            "pi" => ok &= !bounded,
            _ => {}
        }
        rows.push(json!({
            "role": role,
            "form": omega_text(form),
            "dims": g.dims,
            "class": g.class.as_str(),
        }));
        Ok(())
    };
    for t in &b.taus {
        add("tau", t, c)?;
    }
    for s in &b.seeds {
        add("pi", &s.form, c)?;
    }
    let coords: Vec<Coordinate> = if extra.is_empty() {
        (1..=om.m()).map(|j| Coordinate::w(j, 0)).collect()
    } else {
        extra.to_vec()
    };
    for cc in &coords {
        add("omega", &om.natural_form(cc)?, c)?;
    }
    let key = Value::from(rows.clone());
    Ok(Step::Done(Outcome::new(
        Verdict::from_bool(ok),
        vec![("depth", Value::from(depth)), ("growth", Value::from(rows))],
        key,
    )))
}

fn fit_json(h: &HilbertFit) -> Value {
    json!({ "nu": h.nu(), "mu": h.mu(), "e": h.coeffs, "onset": h.onset })
}

fn injectivity_json(r: &InjectivityReport) -> Value {
    Value::from(r.class.as_str())
}

fn hilbert_outcome(om: &Diffiety, l: usize, c: &mut CaseContext) -> Result<Step, CoreError> {
    let nat = Filtration::natural();
    let g = graded_dims(om, &nat, l, c)?;
    let fit = match hilbert_fit(&g) {
        Ok(f) => f,
        Err(CoreError::WindowEscalation(m)) => return Ok(Step::Escalate(m)),
        Err(e) => return Err(e),
    };
    let mut lifts = Vec::new();
    for k in 0..=2usize {
        let gk = graded_dims(om, &nat.lift(k), l + k, c)?;
        match hilbert_fit(&gk) {
            Ok(h) => lifts.push((h.nu(), h.mu())),
            Err(CoreError::WindowEscalation(m)) => return Ok(Step::Escalate(m)),
            Err(e) => return Err(e),
        }
    }
    let lift_invariant = lifts.iter().all(|&p| p == (fit.nu(), fit.mu()));
    let natural = injectivity_window(om, &nat, om.totals(), l, c)?;
    let mut injectivity = serde_json::Map::new();
    injectivity.insert("natural".into(), injectivity_json(&natural));
    if om.n() == 1 && l > 1 {
        let chain = descending_chain(om, om.d(), l - 1, c)?;
        let refined = injectivity_window(om, &chain.standard_filtration(), om.totals(), l, c)?;
        injectivity.insert("refined".into(), injectivity_json(&refined));
    }
    let key = json!([fit.nu(), fit.mu(), fit.coeffs, lift_invariant, injectivity]);
    let data = vec![
        ("dims", Value::from(g.dims.clone())),
        ("nu", Value::from(fit.nu())),
        ("mu", Value::from(fit.mu())),
        ("hilbert", fit_json(&fit)),
        ("summary", Value::from(fit.to_string())),
        ("lift_invariant", Value::from(lift_invariant)),
        ("injectivity", Value::Object(injectivity)),
    ];
    Ok(Step::Done(Outcome::new(Verdict::from_bool(lift_invariant), data, key)))
}

fn variations_outcome(
    om: &Diffiety,
    z: &Expr,
    p: &[Expr],
    zk: &[Expr],
    l: usize,
    seed: u64,
    c: &mut CaseContext,
) -> Result<Step, CoreError> {
    let b = standard_basis(om, l, seed, c)?;
    if p.len() != b.mu() || zk.len() > b.k() {
        return Err(CoreError::Rejected(format!(
            "the basis has mu = {} and K = {}; got {} p and {} zk",
            b.mu(),
            b.k(),
            p.len(),
            zk.len()
        )));
    }
    let mut zk = zk.to_vec();
    zk.resize(b.k(), Expr::zero());
    let v = VariationData {
        z: z.clone(),
        p: p.to_vec(),
        zk,
    };
    let cond = infinitesimal_conditions(&b, &v, om, c)?;
    let conditions = json!({
        "reduced": strings(&cond.reduced),
        "unknown": cond.unknown.as_ref().map(|(u, e)| format!("{u} = {e}")),
        "satisfied": cond.satisfied(),
    });
    let placeholder = z.as_coord().is_some_and(|u| u.is_plain() && !om.contains(&u));
    if placeholder {
        let key = conditions.clone();
        let data = vec![("symmetry_conditions", conditions)];
        return Ok(Step::Done(Outcome::new(Verdict::Pass, data, key)));
    }
    let field = variation_from_data(&v, &b, om, l, c)?;
    let verdict = verify_variation(&field, om, l.saturating_sub(1))?;
    let round_trip = decompose_variation(&field, &b)? == v;
    let ok = verdict.is_variation && verdict.prolongation_rule && round_trip;
    let key = json!([verdict.is_variation, verdict.prolongation_rule, round_trip, conditions]);
    let data = vec![
        ("is_variation", Value::from(verdict.is_variation)),
        ("prolongation_rule", Value::from(verdict.prolongation_rule)),
        ("round_trip", Value::from(round_trip)),
        ("witness", verdict.witness.as_ref().map(omega_text).into()),
        ("symmetry_conditions", conditions),
    ];
    Ok(Step::Done(Outcome::new(Verdict::from_bool(ok), data, key)))
}

fn symmetry_outcome(
    om: &Diffiety,
    f: &Expr,
    seeds: &[(Coordinate, Expr)],
    l: usize,
    seed: u64,
    c: &mut CaseContext,
) -> Result<Step, CoreError> {
    let m = Morphism::new(om, f.clone(), seeds.to_vec(), c)?;
    let r = verify_symmetry(&m, l, seed, c)?;
    let key = json!([r.verdict.as_str(), r.witness]);
    let data = vec![
        ("symmetry", Value::from(r.verdict.as_str())),
        ("witness", r.witness.clone().into()),
    ];
    let v = Verdict::from_bool(r.verdict == SymmetryVerdict::Symmetry);
    Ok(Step::Done(Outcome::new(v, data, key)))
}

fn wave_outcome(
    om: &Diffiety,
    ws: &[Expr],
    fwd: &[Expr],
    bwd: &[Expr],
    order: usize,
    c: &mut CaseContext,
) -> Result<Step, CoreError> {
    let fwd = (!fwd.is_empty()).then_some(fwd);
    let bwd = (!bwd.is_empty()).then_some(bwd);
    let r = if ws.len() == 1 && om.m() > 1 {
        wave_symmetry_single(&ws[0], om, fwd, bwd, order, c)
    } else {
        wave_symmetry(ws, om, fwd, bwd, order, c)
    };
    let r = match r {
        Ok(r) => r,
        Err(CoreError::Rejected(m) | CoreError::Degenerate(m)) => {
            let data = vec![("inverse_certified", Value::from(false)), ("note", Value::from(m.clone()))];
            return Ok(Step::Done(Outcome::new(Verdict::Fail, data, Value::from(m))));
        }
        Err(e) => return Err(e),
    };
    let key = json!([strings(&r.forward_seeds), strings(&r.backward_seeds), r.certified()]);
    let data = vec![
        ("forward", strings(&r.forward_seeds)),
        ("backward", strings(&r.backward_seeds)),
        ("forward_implies_backward", Value::from(r.forward_implies_backward)),
        ("backward_implies_forward", Value::from(r.backward_implies_forward)),
        ("defects", strings(&r.defects)),
        ("inverse_certified", Value::from(r.certified())),
    ];
    Ok(Step::Done(Outcome::new(Verdict::from_bool(r.certified()), data, key)))
}

fn cartan_outcome(s: &SolvedSystem, c: &mut CaseContext) -> Result<Step, CoreError> {
    let r = cartan_test(s, c)?;
    let key = json!([r.sigma, r.sigma_bar, r.pass]);
    let data = vec![
        ("sigma", Value::from(r.sigma.clone())),
        ("sigma_bar", Value::from(r.sigma_bar.clone())),
        ("expected", Value::from(r.expected.clone())),
        ("free", Value::from(r.free())),
        ("unknowns", Value::from(r.unknowns)),
        ("rank", Value::from(r.rank)),
        ("summary", Value::from(r.to_string())),
    ];
    Ok(Step::Done(Outcome::new(Verdict::from_bool(r.pass), data, key)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn contact_spec_builds_contact() {
        let s = parse("system c\ndep u, v\n").unwrap();
        let om = build_diffiety(&s).unwrap().unwrap();
        assert_eq!((om.n(), om.m()), (1, 2));
        let sess = Session::new(&s, Options::default()).unwrap();
        assert_eq!(sess.expand(&[]).len(), 4);
    }

    #[test]
    fn unknown_analysis_is_reported_at_its_position() {
        let s = parse("system c\ndep u\nquery frobnicate\n").unwrap();
        let sess = Session::new(&s, Options::default()).unwrap();
        let err = sess.run(&s.queries).unwrap_err();
        assert!(matches!(err, CliError::Dsl(DslError::Semantic { line: 3, col: 7, .. })), "{err}");
    }

    #[test]
    fn pde_without_first_order_form_is_rejected_by_cartan() {
        let s = parse("system p\nindep x, y\ndep u\neq D_x(D_x(u)) = u\n").unwrap();
        assert!(solved_system(&s).is_err());
    }
}
