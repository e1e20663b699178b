//! Batch front-end: a JSON manifest in, one JSON report out.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::calculus::{
    differential, expand, expand_mobius, integrate, is_closed, uniformity, Form, FormJson, LocalFunction,
    LocalFunctionJson, PathPotential,
};
use crate::cohomology::{
    check_cocycle_and_symmetry, compute_pairing, h0_report, solve_splitting, uniformize, PairingTable, ProbePlan,
    Splitting,
};
use crate::configspace::{check_irreducible_quantification, Configuration, DEFAULT_BUDGET};
use crate::decomposition::{
    build_omega_rho, counterexample_z_multispecies, extract_cocycle, interior_margin, varadhan_decompose, Cocycle,
    DecomposeOptions,
};
use crate::error::{Error, Result};
use crate::interaction::{ConsvBasis, Interaction, StateSpace};
use crate::locale::{classify_transferability, GroupAction, Locale, ProbeOptions, Vertex, Window};
use crate::rational::{fmt_q, parse_q, Q};

pub const COMMANDS: &[&str] = &[
    "consv",
    "validate",
    "irreducible",
    "expand",
    "diff",
    "closed",
    "integrate",
    "pairing",
    "split",
    "uniformize",
    "h0",
    "omega-rho",
    "delta",
    "decompose",
    "counterexample",
    "transfer",
];

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum InteractionSpec {
    Builtin(String),
    Custom {
        #[serde(default = "custom_name")]
        name: String,
        states: Vec<i64>,
        /// Index into `states`.
        base: usize,
        map: Vec<[i64; 4]>,
    },
}

fn custom_name() -> String {
    "custom".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowSpec {
    Box { lo: Vec<i64>, hi: Vec<i64> },
    Ball { center: Vec<i64>, radius: u64 },
    Vertices(Vec<Vertex>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Explicit `(Λ, Λ′)` pairs.
    pub pairs: Option<Vec<(Vec<Vertex>, Vec<Vertex>)>>,
    pub oriented: Option<bool>,
    /// Ball pairs of this radius, see [`ProbePlan::balls`].
    pub balls: Option<u64>,
    pub limit: Option<usize>,
    /// Partners per region, see [`ProbePlan::anchored`].
    pub partners: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct CellSpec {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub v: String,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub cells: Vec<CellSpec>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSpec {
    pub r_max: Option<u64>,
    pub margin: Option<u64>,
    pub centers: Option<Vec<Vertex>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub locale: Option<Locale>,
    pub interaction: Option<InteractionSpec>,
    pub window: Option<WindowSpec>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    /// Uniformity radius `R`.
    pub radius: Option<u64>,
    pub probe: Option<ProbeSpec>,
    pub function: Option<LocalFunctionJson>,
    pub form: Option<FormJson>,
    pub cocycle: Option<Value>,
    pub table: Option<TableSpec>,
    pub region: Option<Vec<Vertex>>,
    pub fundamental_domain: Option<Vec<Vertex>>,
    pub length: Option<i64>,
    pub transfer: Option<TransferSpec>,
    pub decompose: Option<DecomposeSpec>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSpec {
    pub partners: Option<usize>,
    pub retries: Option<u64>,
    pub max_subsets: Option<usize>,
}

/// Command-line overrides applied on top of the manifest.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    /// 0 all checks pass, 1 a property is violated, 2 input or budget error.
    pub code: i32,
    pub report: Value,
}

impl Outcome {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("reports serialize") + "\n"
    }
}

fn missing(field: &str) -> Error {
    Error::InvalidInput(format!("manifest field `{field}` is required"))
}

struct Ctx {
    m: Manifest,
    budget: u64,
}

impl Ctx {
    fn locale(&self) -> Result<Locale> {
        self.m.locale.clone().ok_or_else(|| missing("locale"))
    }

    fn interaction(&self) -> Result<Interaction> {
        match self.m.interaction.as_ref().ok_or_else(|| missing("interaction"))? {
            InteractionSpec::Builtin(name) => Interaction::builtin(name),
            InteractionSpec::Custom { name, states, base, map } => {
                Interaction::from_map(name, StateSpace::new(states.clone(), *base)?, map)
            }
        }
    }

    fn window(&self) -> Result<Window> {
        let locale = self.locale()?;
        match self.m.window.as_ref().ok_or_else(|| missing("window"))? {
            WindowSpec::Box { lo, hi } => Window::from_box(&locale, lo, hi),
            WindowSpec::Ball { center, radius } => locale.ball(&Vertex::new(center), *radius),
            WindowSpec::Vertices(vs) => Window::new(locale, vs.clone()),
        }
    }

    fn radius(&self) -> u64 {
        self.m.radius.unwrap_or(1)
    }

    fn action(&self, locale: &Locale) -> Result<(GroupAction, Vec<Vertex>)> {
        let action = locale
            .default_action()
            .ok_or_else(|| Error::UnsupportedLocale("no default free action on this locale".into()))?;
        let domain = self.m.fundamental_domain.clone().unwrap_or_else(|| locale.default_fundamental_domain());
        Ok((action, domain))
    }

    fn function(&self, inter: &Interaction) -> Result<LocalFunction> {
        let j = self.m.function.as_ref().ok_or_else(|| missing("function"))?;
        LocalFunction::from_json(j, inter.n_states(), inter.base())
    }

    fn form(&self, locale: &Locale, inter: &Interaction) -> Result<Form> {
        let j = self.m.form.as_ref().ok_or_else(|| missing("form"))?;
        Form::from_json(j, locale, inter.n_states(), inter.base())
    }

    fn plan(&self, window: &Window, region: Option<&[Vertex]>) -> Result<Option<ProbePlan>> {
        let Some(p) = &self.m.probe else { return Ok(None) };
        let mut plan = if let Some(pairs) = &p.pairs {
            ProbePlan::new(pairs.clone())
        } else if let Some(r) = p.balls {
            ProbePlan::balls(window, self.radius(), r, p.limit.unwrap_or(8))?
        } else if let (Some(n), Some(region)) = (p.partners, region) {
            ProbePlan::anchored(window, region, self.radius(), n)?
        } else {
            return Err(Error::InvalidInput("probe needs `pairs`, `balls`, or `partners` with a region".into()));
        };
        if let Some(o) = p.oriented {
            plan.oriented = o;
        }
        Ok(Some(plan))
    }
}

fn parse_manifest(manifest: &Value) -> Result<Manifest> {
    let m: Manifest = serde_json::from_value(manifest.clone())?;
    if m.budget == Some(0) {
        return Err(Error::InvalidInput("budget must be positive".into()));
    }
    Ok(m)
}

fn basis_json(basis: &ConsvBasis) -> Value {
    json!(basis.vectors.iter().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn error_report(command: &str, e: &Error) -> Value {
    json!({
        "command": command,
        "error": e.to_string(),
        "property_violation": e.is_property_violation(),
    })
}

/// Runs one command. Errors become reports with exit code 1 or 2.
pub fn run_command(command: &str, manifest: &Value, overrides: &Overrides) -> Outcome {
    let result = parse_manifest(manifest).and_then(|mut m| {
        if overrides.seed.is_some() {
            m.seed = overrides.seed;
        }
        if overrides.budget.is_some() {
            m.budget = overrides.budget;
        }
        if m.budget == Some(0) {
            return Err(Error::InvalidInput("budget must be positive".into()));
        }
        let budget = m.budget.unwrap_or(DEFAULT_BUDGET);
        dispatch(command, &Ctx { m, budget })
    });
    match result {
        Ok((pass, report)) => Outcome { code: if pass { 0 } else { 1 }, report },
        Err(e) => Outcome { code: if e.is_property_violation() { 1 } else { 2 }, report: error_report(command, &e) },
    }
}

/// Parses manifest text, then runs the command.
pub fn run_command_str(command: &str, manifest: &str, overrides: &Overrides) -> Outcome {
    match serde_json::from_str::<Value>(manifest) {
        Ok(v) => run_command(command, &v, overrides),
        Err(e) => Outcome { code: 2, report: error_report(command, &Error::Json(e)) },
    }
}

fn dispatch(command: &str, ctx: &Ctx) -> Result<(bool, Value)> {
    match command {
        "consv" => consv(ctx),
        "validate" => validate(ctx),
        "irreducible" => irreducible(ctx),
        "expand" => expand_cmd(ctx),
        "diff" => diff(ctx),
        "closed" => closed(ctx),
        "integrate" => integrate_cmd(ctx),
        "pairing" => pairing(ctx),
        "split" => split(ctx),
        "uniformize" => uniformize_cmd(ctx),
        "h0" => h0(ctx),
        "omega-rho" => omega_rho(ctx),
        "delta" => delta(ctx),
        "decompose" => decompose(ctx),
        "counterexample" => counterexample(ctx),
        "transfer" => transfer(ctx),
        other => Err(Error::InvalidInput(format!("unknown command `{other}`"))),
    }
}

fn consv(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    for w in &inter.warnings {
        eprintln!("warning: {w}");
    }
    let basis = inter.conserved_quantities();
    Ok((true, json!({"c_phi": basis.dim(), "basis": basis_json(&basis)})))
}

fn validate(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let validity = inter.validate();
    let basis = inter.conserved_quantities();
    let table = inter.exchange_table();
    let failure = table.first_failure().map(|(a, b)| [inter.states.labels[a], inter.states.labels[b]]);
    Ok((
        validity.relaxed,
        json!({
            "interaction": inter.name,
            "validity": validity,
            "exchangeable": table.is_exchangeable(),
            "exchange_failure": failure,
            "simple": inter.is_simple(&basis),
            "c_phi": basis.dim(),
            "warnings": inter.warnings,
        }),
    ))
}

fn irreducible(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let basis = inter.conserved_quantities();
    let rep = check_irreducible_quantification(&inter, &basis, &window, ctx.budget)?;
    Ok((rep.consistent, json!({"window": window.vertices(), "report": rep})))
}

fn expand_cmd(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let locale = ctx.locale()?;
    let f = ctx.function(&inter)?;
    let rec = expand(&f)?;
    let mob = expand_mobius(&f)?;
    let agree = rec == mob;
    let reconstructs = rec.reconstruct()? == f;
    let vanish = rec.terms_vanish_at_base();
    let terms: Vec<Value> = rec.nonzero().map(|(_, t)| json!(t.to_json())).collect();
    let cert = uniformity(&f, &locale, ctx.radius())?;
    Ok((
        agree && reconstructs && vanish,
        json!({
            "terms": terms,
            "recursion_matches_mobius": agree,
            "reconstructs": reconstructs,
            "exact_support": vanish,
            "uniformity": cert,
        }),
    ))
}

fn diff(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let f = ctx.function(&inter)?;
    let form = differential(&f, &window, &inter)?;
    let alternation = form.check_alternation(&inter)?;
    Ok((alternation.is_none(), json!({"form": form.to_json(), "alternation_violation": alternation})))
}

fn closed(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let form = ctx.form(window.locale(), &inter)?;
    let rep = is_closed(&form, &window, &inter, ctx.budget)?;
    let witness = rep.witness.as_ref().map(|w| json!({"path": w.path, "integral": fmt_q(&w.integral)}));
    Ok((
        rep.closed,
        json!({
            "closed": rep.closed,
            "components": rep.components,
            "configurations": rep.configurations,
            "witness": witness,
        }),
    ))
}

fn integrate_cmd(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let form = ctx.form(window.locale(), &inter)?;
    let integral = integrate(&form, &window, &inter, ctx.budget)?;
    Ok((true, json!({"function": integral.function.to_json(), "pins": integral.pins})))
}

/// Evaluates either `function` or, failing that, the path potential of `form`.
fn with_target<T>(
    ctx: &Ctx,
    inter: &Interaction,
    basis: &ConsvBasis,
    window: &Window,
    body: impl FnOnce(&mut dyn FnMut(&Configuration) -> Result<Q>) -> Result<T>,
) -> Result<T> {
    if ctx.m.function.is_some() {
        let f = ctx.function(inter)?;
        let mut eval = |eta: &Configuration| Ok(f.eval(eta).clone());
        body(&mut eval)
    } else {
        let form = ctx.form(window.locale(), inter)?;
        let potential = PathPotential::new(&form, inter, basis, window, ctx.budget);
        let mut eval = |eta: &Configuration| potential.eval(eta);
        body(&mut eval)
    }
}

fn pairing(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let basis = inter.conserved_quantities();
    let radius = ctx.radius();
    let plan = match ctx.plan(&window, ctx.m.region.as_deref())? {
        Some(p) => p,
        None => ProbePlan::balls(&window, radius, 0, 8)?,
    };
    let table = with_target(ctx, &inter, &basis, &window, |f| compute_pairing(&mut &mut *f, &inter, &basis, &window, radius, &plan))?;
    let laws = check_cocycle_and_symmetry(&table);
    Ok((laws.cocycle, json!({"pairing": table.to_json(), "laws": laws, "plan": plan, "radius": radius})))
}

fn parse_table(spec: &TableSpec) -> Result<PairingTable> {
    let mut cells = BTreeMap::new();
    for c in &spec.cells {
        if c.a.len() != c.b.len() {
            return Err(Error::InvalidInput("cell quantities differ in length".into()));
        }
        let v = parse_q(&c.v)?;
        if let Some(prev) = cells.insert((c.a.clone(), c.b.clone()), v.clone()) {
            if prev != v {
                return Err(Error::IllDefinedPairing(format!("cell ({:?}, {:?}) given twice", c.a, c.b)));
            }
        }
    }
    Ok(PairingTable { cells, probes: vec![] })
}

fn split(ctx: &Ctx) -> Result<(bool, Value)> {
    let table = parse_table(ctx.m.table.as_ref().ok_or_else(|| missing("table"))?)?;
    let laws = check_cocycle_and_symmetry(&table);
    let splitting = solve_splitting(&table)?;
    let ok = matches!(splitting, Splitting::Solved { .. });
    Ok((ok, json!({"laws": laws, "splitting": splitting.to_json()})))
}

fn uniformize_cmd(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let basis = inter.conserved_quantities();
    let radius = ctx.radius();
    let region = match &ctx.m.region {
        Some(r) => r.clone(),
        None => match &ctx.m.function {
            Some(f) => f.support.clone(),
            None => return Err(missing("region")),
        },
    };
    let plan = ctx.plan(&window, Some(&region))?;
    let rep = with_target(ctx, &inter, &basis, &window, |f| {
        uniformize(&mut &mut *f, &inter, &basis, &window, radius, &region, plan)
    })?;
    let ok = rep.pairing_of_g_vanishes && rep.criterion_violation.is_none() && rep.certificate.passes;
    Ok((
        ok,
        json!({
            "pairing": rep.pairing.to_json(),
            "h": rep.h.iter().map(|(a, v)| json!({"a": a, "v": fmt_q(v)})).collect::<Vec<_>>(),
            "g": rep.g.to_json(),
            "pairing_of_g_vanishes": rep.pairing_of_g_vanishes,
            "criterion_checks": rep.criterion_checks,
            "criterion_violation": rep.criterion_violation,
            "certificate": rep.certificate,
            "radius": radius,
        }),
    ))
}

fn h0(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let basis = inter.conserved_quantities();
    let rep = h0_report(&window, &inter, &basis, ctx.budget)?;
    Ok((rep.constant_on_components && rep.separates_components, json!({"window": window.vertices(), "report": rep})))
}

fn cocycle(ctx: &Ctx, basis: &ConsvBasis, action: &GroupAction) -> Result<Cocycle> {
    let v = ctx.m.cocycle.as_ref().ok_or_else(|| missing("cocycle"))?;
    Cocycle::from_json(v, basis.dim(), action.rank())
}

fn omega_rho(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let basis = inter.conserved_quantities();
    let (action, domain) = ctx.action(window.locale())?;
    let rho = cocycle(ctx, &basis, &action)?;
    let form = build_omega_rho(&rho, &action, &domain, &window, &inter, &basis)?;
    Ok((true, json!({"cocycle": rho.to_json(&inter.name), "form": form.to_json(), "fundamental_domain": domain})))
}

fn delta(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let basis = inter.conserved_quantities();
    let (action, domain) = ctx.action(window.locale())?;
    let form = ctx.form(window.locale(), &inter)?;
    let ex = extract_cocycle(&form, &window, &inter, &basis, &action, &domain, ctx.budget)?;
    Ok((
        ex.invariance.invariant,
        json!({
            "cocycle": ex.rho.to_json(&inter.name),
            "center": ex.center,
            "closed_on": ex.closed_on,
            "invariance": ex.invariance,
            "cross_checks": ex.cross_checks,
            "margin": interior_margin(form.radius, &action, &domain, window.locale()),
        }),
    ))
}

fn decompose(ctx: &Ctx) -> Result<(bool, Value)> {
    let inter = ctx.interaction()?;
    let window = ctx.window()?;
    let basis = inter.conserved_quantities();
    let (action, domain) = ctx.action(window.locale())?;
    let form = ctx.form(window.locale(), &inter)?;
    let mut opts = DecomposeOptions { budget: ctx.budget, ..Default::default() };
    if let Some(d) = &ctx.m.decompose {
        opts.partners = d.partners.unwrap_or(opts.partners);
        opts.retries = d.retries.unwrap_or(opts.retries);
        opts.max_subsets = d.max_subsets.unwrap_or(opts.max_subsets);
    }
    let res = varadhan_decompose(&form, &window, &inter, &basis, &action, &domain, &opts)?;
    Ok((
        true,
        json!({
            "rho": res.rho.to_json(&inter.name),
            "fhat": res.fhat.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
            "uniform_radius": res.uniform_radius,
            "margin": res.margin,
            "edges_checked": res.edges_checked,
            "residual": fmt_q(&res.residual),
            "pairing": res.pairing.to_json(),
            "plan": res.plan,
        }),
    ))
}

fn counterexample(ctx: &Ctx) -> Result<(bool, Value)> {
    let len = ctx.m.length.unwrap_or(9);
    let rep = counterexample_z_multispecies(len)?;
    let reproduced = rep.closed && !rep.symmetric && !rep.splitting_feasible && rep.certificate_valid;
    Ok((reproduced, json!({"interaction": "multispecies:2", "length": len, "report": rep})))
}

fn transfer(ctx: &Ctx) -> Result<(bool, Value)> {
    let locale = ctx.locale()?;
    let mut opts = ProbeOptions::default();
    if let Some(t) = &ctx.m.transfer {
        opts.r_max = t.r_max.unwrap_or(opts.r_max);
        opts.margin = t.margin;
        opts.centers = t.centers.clone();
    }
    opts.budget = opts.budget.min(usize::try_from(ctx.budget).unwrap_or(usize::MAX));
    let rep = classify_transferability(&locale, &opts)?;
    Ok((true, json!({"locale": locale, "report": rep})))
}
