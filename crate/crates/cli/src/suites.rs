use std::collections::BTreeMap;
use std::time::Instant;

use bdlab_core::functional::{
    change_basis, d_star, d_vector, e_star, evaluation_analysis, opnorm_l1, pairing, project_star,
};
use bdlab_core::sequence::{
    default_j_seq, evaluate_estimates, least_ris_constant, BlockSequence, Check, CheckKind, EstimateInput,
    EstimateReport, Instance, Status,
};
use bdlab_core::shift::{
    compact_witness, s_apply, s_star, s_star_pow, s_star_via_other_basis, shift_power_family_rank,
};
use bdlab_core::{
    Basis, Candidate, ConstructionConfig, Error, Functional, GammaId, Interval, Result, Universe, Vector, Q,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lab::{
    build_depseq, build_longest_pair, DepSeqDocument, DepSeqRequest, PairCertificate, PairParams, Strategy,
};
use crate::report::{level_counts, Suite, SuiteReport, VerificationReport, SCHEMA_VERSION};

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub timings: bool,
    /// Random `(f, x)` pairs for the duality check.
    pub duality_pairs: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { suites: Suite::ALL.to_vec(), seed: 0, timings: false, duality_pairs: 1000 }
    }
}

fn fact(check: &mut Check, holds: bool, id: GammaId) {
    check.observe(Instance::fact(holds).at(id));
}

pub fn gamma_suite(u: &Universe) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Gamma);
    let mut adm = Check::identity("every element is admissible");
    let mut order = Check::identity("levels are contiguous and in canonical order");
    let mut sigma = Check::identity("sigma is injective and exceeds every sigma of lower rank");
    let mut age = Check::identity("age <= n_weight");
    for id in u.ids() {
        let e = u.element(id);
        fact(&mut adm, u.validate(&e.candidate())?.is_empty(), id);
        if id.0 > 0 {
            let prev = u.element(GammaId(id.0 - 1));
            let ok = prev.rank < e.rank || (prev.rank == e.rank && prev.candidate() < e.candidate());
            fact(&mut order, ok, id);
        }
        if let Some(w) = e.weight_idx() {
            age.observe(Instance::le(Q::from_int(e.age as i64), u.config().n_q(w)).at(id));
        }
    }
    let mut seen = BTreeMap::new();
    let mut below_max = 0u64;
    let mut level_max = 0u64;
    let mut cur_rank = 0;
    for id in u.ids() {
        let (rk, s) = (u.rank(id), u.sigma(id));
        if rk != cur_rank {
            below_max = below_max.max(level_max);
            cur_rank = rk;
        }
        level_max = level_max.max(s);
        let fresh = seen.insert(s, id).is_none();
        fact(&mut sigma, fresh && s > below_max && s > rk as u64, id);
    }
    let sets: Vec<_> = u.ids().map(|g| u.sigma_set(g)).collect::<Result<_>>()?;
    let mut grow = Check::identity("Sigma(gamma) is contained in Sigma(F gamma)");
    let mut sep = Check::identity("rank gamma > rank gamma' implies Sigma(gamma') < Sigma(gamma)");
    let mut member = Check::identity("sigma(gamma) in Sigma(delta) forces gamma = delta or F^j gamma = delta");
    for g in u.ids() {
        if let Some(t) = u.f(g) {
            fact(&mut grow, sets[g.index()].is_subset(&sets[t.index()]), g);
        }
    }
    // Extremes per rank suffice for the separation clause.
    let mut by_rank: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for g in u.ids() {
        let s = &sets[g.index()];
        let (lo, hi) = (*s.first().expect("Sigma contains sigma"), *s.last().expect("Sigma contains sigma"));
        let slot = by_rank.entry(u.rank(g)).or_insert((lo, hi));
        *slot = (slot.0.min(lo), slot.1.max(hi));
    }
    let ranks: Vec<_> = by_rank.into_iter().collect();
    for w in ranks.windows(2) {
        sep.observe(Instance::fact(w[0].1 .1 < w[1].1 .0).index(w[1].0));
    }
    let owner: BTreeMap<u64, GammaId> = u.ids().map(|g| (u.sigma(g), g)).collect();
    for d in u.ids() {
        for s in &sets[d.index()] {
            let g = owner[s];
            let ok = g == d || (1..u.k()).any(|j| u.f_iter(g, j) == Some(d));
            fact(&mut member, ok, d);
        }
    }
    for c in [adm, order, sigma, age, grow, sep, member] {
        r.identity(c);
    }
    Ok(r)
}

pub fn functional_suite(u: &Universe) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Functional);
    let h = u.sealed_rank();
    let d_stars: Vec<Functional> = u.ids().map(|id| d_star(u, id)).collect();
    let mut bio = Check::identity("<d*_xi, d_gamma> = [xi = gamma]");
    for g in u.ids() {
        let x = d_vector(u, g, h)?;
        for xi in u.ids() {
            let want = if xi == g { Q::one() } else { Q::zero() };
            bio.observe(Instance::eq(pairing(u, &d_stars[xi.index()], &x)?, want).at(g).index(xi.index()));
        }
    }
    r.identity(bio);

    let mut round = Check::identity("e* -> d* -> e* round trip");
    for g in u.ids() {
        let e = e_star(g);
        let back = change_basis(u, &change_basis(u, &e, Basis::DStar), Basis::EStar);
        fact(&mut round, back == e, g);
    }
    r.identity(round);

    let mut full = Check::identity("evaluation analysis reproduces e*_gamma (full form)");
    let mut partial = Check::identity("evaluation analysis reproduces e*_gamma (partial forms)");
    for g in u.ids() {
        let Some(a) = evaluation_analysis(u, g) else { continue };
        let want = e_star(g);
        fact(&mut full, change_basis(u, &a.full(u), Basis::EStar) == want, g);
        for t in 1..=a.age() {
            let ok = change_basis(u, &a.partial(u, t), Basis::EStar) == want;
            partial.observe(Instance::fact(ok).at(g).index(t));
        }
    }
    r.identity(full);
    r.identity(partial);

    let m = u.config().basis_constant();
    let mut proj = Check::identity(format!("||P*_(0,q)||_1 <= M = {m}"));
    for q in 1..=h {
        let norm = opnorm_l1(u, u.ids(), |f| project_star(u, &Interval::upto(q), f));
        proj.observe(Instance::le(norm, m.clone()).index(q));
    }
    r.identity(proj);
    Ok(r)
}

fn random_q(rng: &mut ChaCha8Rng) -> Q {
    Q::new(rng.gen_range(-5..=5), rng.gen_range(1..=4))
}

fn random_d_terms(u: &Universe, rng: &mut ChaCha8Rng, n: usize) -> BTreeMap<GammaId, Q> {
    (0..rng.gen_range(1..=n)).map(|_| (GammaId(rng.gen_range(0..u.len() as u32)), random_q(rng))).collect()
}

pub fn shift_suite(u: &Universe, seed: u64, duality_pairs: usize) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Shift);
    let k = u.k();
    let h = u.sealed_rank();
    let mut nil = Check::identity(format!("(S*)^{k} e*_gamma = 0"));
    let mut via = Check::identity("S* agrees in the e* and d* bases");
    let mut rank = Check::identity("F preserves rank");
    let mut weight = Check::identity("F preserves weight");
    let mut age = Check::identity("F does not increase age");
    let mut adm = Check::identity("every F image is admissible");
    for g in u.ids() {
        fact(&mut nil, s_star_pow(u, &e_star(g), k).is_zero(), g);
        let dg = Functional::unit(Basis::DStar, g);
        fact(&mut via, s_star(u, &dg) == s_star_via_other_basis(u, &dg), g);
        let Some(t) = u.f(g) else { continue };
        let (eg, et) = (u.element(g), u.element(t));
        fact(&mut rank, eg.rank == et.rank, g);
        fact(&mut weight, eg.weight_idx() == et.weight_idx(), g);
        fact(&mut age, et.age <= eg.age, g);
        fact(&mut adm, u.validate(&et.candidate())?.is_empty(), t);
    }
    let lookup_base =
        |j: usize| u.lookup(&Candidate::base(j)).ok_or_else(|| Error::Invariant(format!("base element {j} missing")));
    let top = s_star_pow(u, &e_star(lookup_base(k - 1)?), k - 1);
    let mut top_check = Check::identity(format!("(S*)^{} e*_{} = e*_0", k - 1, k - 1));
    fact(&mut top_check, top == e_star(lookup_base(0)?), lookup_base(k - 1)?);
    let mut fam = Check::identity("S^0, ..., S^(k-1) are linearly independent");
    fam.observe(Instance::eq(Q::from_int(shift_power_family_rank(u, h) as i64), Q::from_int(k as i64)));
    for c in [nil, top_check, via, rank, weight, age, adm, fam] {
        r.identity(c);
    }

    let mut pre = Check::identity("S d_delta = sum of d_gamma over F gamma = delta");
    for d in u.ids() {
        let sx = s_apply(u, &d_vector(u, d, h)?)?;
        let mut want = Vector::zero(u, h)?;
        for &g in u.preimages(d) {
            want = want.plus(&d_vector(u, g, h)?);
        }
        fact(&mut pre, sx == want, d);
    }
    r.identity(pre);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dual = Check::identity("<S* f, x> = <f, S x> on random pairs");
    for i in 0..duality_pairs {
        let f = Functional::from_terms(Basis::EStar, random_d_terms(u, &mut rng, 4));
        let x = Vector::from_d_coords(u, &random_d_terms(u, &mut rng, 6), h)?;
        let lhs = pairing(u, &s_star(u, &f), &x)?;
        let rhs = pairing(u, &f, &s_apply(u, &x)?)?;
        dual.observe(Instance::eq(lhs, rhs).index(i));
    }
    r.identity(dual);

    let lambdas: Vec<Q> = (0..k).map(|_| random_q(&mut rng)).collect();
    let mut cw0 = Check::identity("compact witness for j = 0 equals 2|lambda_0|");
    let mut cwj = Check::identity("compact witness for family j equals 2 sum_{i<=j} |lambda_i|");
    let mut notes = Vec::new();
    for j in 0..k {
        match compact_witness(u, j, 1, 2, &lambdas) {
            Ok(got) => {
                let want = lambdas[..=j].iter().map(Q::abs).sum::<Q>() * Q::from_int(2);
                let inst = Instance::eq(got, want).index(j);
                if j == 0 {
                    cw0.observe(inst.clone());
                }
                cwj.observe(inst);
            }
            Err(e) => notes.push(format!("family {j}: {e}")),
        }
    }
    for c in [cw0, cwj] {
        if c.instances == 0 {
            r.push(Status::Warn, c, notes.clone());
        } else {
            r.identity(c);
        }
    }
    r.notes.push(format!(
        "witness coefficients: {}",
        lambdas.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    ));
    Ok(r)
}

/// Constructions shared by the sequence and estimate suites.
pub struct Lab {
    pub chain: std::result::Result<(Universe, PairCertificate), Error>,
    pub zero_b: std::result::Result<(Universe, PairCertificate), Error>,
    pub enumerated: std::result::Result<(Universe, PairCertificate), Error>,
    pub shifted: std::result::Result<(Universe, PairCertificate), Error>,
    pub depseq: std::result::Result<(Universe, DepSeqDocument), Error>,
}

impl Lab {
    pub fn build(cfg: &ConstructionConfig) -> Lab {
        let base = PairParams { length: 2, ..PairParams::default() };
        Lab {
            chain: build_longest_pair(cfg, &base),
            zero_b: build_longest_pair(cfg, &PairParams { zero_b: true, ..base.clone() }),
            enumerated: build_longest_pair(cfg, &PairParams { strategy: Strategy::Enumerated, ..base.clone() }),
            shifted: build_longest_pair(cfg, &PairParams { strategy: Strategy::Shifted, ..base }),
            depseq: build_depseq(cfg, &DepSeqRequest::default()),
        }
    }
}

fn unavailable(r: &mut SuiteReport, label: &str, e: &Error) {
    let status = if matches!(e, Error::SupplierExhausted(_)) { Status::Warn } else { Status::Fail };
    let c = Check::identity(format!("{label}: construction")).with(Instance::fact(false));
    r.push(status, c, vec![e.to_string()]);
}

fn pair_entries(r: &mut SuiteReport, label: &str, u: &Universe, cert: &PairCertificate) {
    let regime = u.config().regime;
    for c in &cert.report.conditions {
        let mut c = c.clone();
        c.name = format!("{label}: {}", c.name);
        match c.kind {
            CheckKind::Identity => r.identity(c),
            CheckKind::Magnitude => {
                let s = c.status(regime, false);
                r.push(s, c, Vec::new());
            }
        }
    }
    if let Some(ch) = &cert.pair.chain {
        let nominal = u.config().n_q(2 * cert.params.j);
        if Q::from_int(ch.length() as i64) < nominal {
            r.notes.push(format!(
                "{label}: {} blocks instead of n_{} = {nominal}; magnitude conditions are not expected to hold",
                ch.length(),
                2 * cert.params.j
            ));
        }
        let mut ex = Check::identity(format!("{label}: S^l z(eta) = 0 for l < k"));
        for (l, v) in ch.exactness.iter().enumerate() {
            ex.observe(Instance::eq(v.clone(), Q::zero()).at(ch.eta).index(l));
        }
        r.identity(ex);
        let mut an = Check::identity(format!("{label}: analysis of eta returns the chain data"));
        let ok = evaluation_analysis(u, ch.eta).is_some_and(|a| {
            a.p0 == ch.cuts[0]
                && a.steps.len() == ch.length()
                && a.steps
                    .iter()
                    .zip(ch.cuts[1..].iter().zip(&ch.bs).zip(&ch.chain))
                    .all(|(s, ((q, b), xi))| s.p == *q && &s.b == b && s.xi == *xi)
        });
        fact(&mut an, ok, ch.eta);
        r.identity(an);
    }
    if let Some(o) = &cert.pair.shifted {
        let mut c = Check::identity(format!("{label}: x(eta) = 1 with eta = F^(m-1) gamma"));
        c.observe(Instance::eq(o.x_at_eta.clone(), Q::one()).at(cert.pair.eta));
        fact(&mut c, u.f_iter(o.gamma, o.m - 1) == Some(cert.pair.eta), o.gamma);
        r.identity(c);
    }
}

pub fn sequence_suite(lab: &Lab) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Sequence);
    for (label, built) in [
        ("explicit chain pair", &lab.chain),
        ("zero-b chain pair", &lab.zero_b),
        ("enumerated chain pair", &lab.enumerated),
        ("shifted pair", &lab.shifted),
    ] {
        match built {
            Ok((u, cert)) => {
                pair_entries(&mut r, label, u, cert);
                if label.starts_with("zero-b") {
                    let mut c = Check::identity("zero-b chain pair: z(eta) = 0");
                    c.observe(Instance::eq(cert.value_at_eta.clone(), Q::zero()).at(cert.pair.eta));
                    r.identity(c);
                }
            }
            Err(e) => unavailable(&mut r, label, e),
        }
    }
    match &lab.depseq {
        Ok((u, doc)) => {
            let cert = &doc.certificate;
            for c in &cert.clauses {
                let mut c = c.clone();
                c.name = format!("dependent sequence: {}", c.name);
                r.identity(c);
            }
            let mut m = cert.magnitude.clone();
            m.name = format!("dependent sequence: {}", m.name);
            let s = m.status(u.config().regime, true);
            r.push(s, m, Vec::new());
            r.notes.push(format!(
                "dependent sequence of length {} (nominal {}), eta weights {:?}",
                cert.length, cert.nominal_length, cert.eta_weight_idx
            ));
        }
        Err(e) => unavailable(&mut r, "dependent sequence", e),
    }
    r
}

fn push_estimates(r: &mut SuiteReport, label: &str, rep: &EstimateReport) {
    for e in &rep.entries {
        r.push_estimate(format!("{label}: {} [{}]", e.estimate, e.check.name), e);
    }
}

pub fn estimates_suite(lab: &Lab) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Estimates);
    match &lab.chain {
        Ok((u, cert)) => {
            let ch = cert.pair.chain.as_ref().expect("chain strategy yields chain data");
            let seq = BlockSequence::new(u, ch.blocks.clone())?;
            let js = default_j_seq(&seq);
            let c = least_ris_constant(u, &seq, &js);
            r.notes.push(format!("block sequence of {} chain blocks is a {c}-RIS with j = {js:?}", seq.len()));
            let signs: Vec<Q> = (0..seq.len()).map(|i| if i % 2 == 0 { Q::one() } else { -Q::one() }).collect();
            for j0 in 1..=u.config().weight_count() {
                let ris = evaluate_estimates(u, &EstimateInput::Ris { seq: &seq, c: c.clone(), j0 })?;
                push_estimates(&mut r, &format!("j0 = {j0}"), &ris);
                let lam = EstimateInput::Lambda { seq: &seq, lambdas: signs.clone(), c: c.clone(), j0 };
                push_estimates(&mut r, &format!("j0 = {j0}"), &evaluate_estimates(u, &lam)?);
            }
            let lb = evaluate_estimates(u, &EstimateInput::LowerBound { seq: &seq, j: 1 })?;
            push_estimates(&mut r, "j = 1", &lb);
            if let Some(w) = lb.witness {
                r.notes.push(format!("norming element of weight index 2 found: {w}"));
            }
        }
        Err(e) => r.notes.push(format!("no chain pair: {e}")),
    }
    match &lab.depseq {
        Ok((u, doc)) => {
            for alternating in [false, true] {
                let input = EstimateInput::Dependent { cert: &doc.certificate, alternating };
                push_estimates(&mut r, "dependent", &evaluate_estimates(u, &input)?);
            }
        }
        Err(e) => r.notes.push(format!("no dependent sequence: {e}")),
    }
    Ok(r)
}

fn regime_notes(cfg: &ConstructionConfig) -> Vec<String> {
    let mut out: Vec<String> = cfg
        .relaxed_clauses()
        .iter()
        .map(|c| format!("growth clause {} fails at j = {}: {}", c.clause, c.index, c.detail))
        .collect();
    if !cfg.is_strict() {
        out.push("relaxed regime: odd-weight elements skip the magnitude test; magnitude violations are WARN".into());
    }
    out
}

fn net_notes(u: &Universe) -> Vec<String> {
    let c = u.config();
    let caps = &c.net_caps;
    let mut out = vec![format!(
        "b functionals have at most {} terms with coefficient denominators at most {}",
        caps.max_support, caps.denominator_bound
    )];
    if let Some(p) = caps.eta_pool {
        out.push(format!("enumeration draws on the first {p} elements of each weight class per level, closed under F"));
    }
    out.push(format!("{} elements materialized of the cap {}", u.len(), c.max_elements));
    out
}

fn timed<T>(timings: bool, f: impl FnOnce() -> T) -> (T, Option<u64>) {
    let t = Instant::now();
    let v = f();
    (v, timings.then(|| t.elapsed().as_millis() as u64))
}

/// Builds the capped universe and runs the selected suites in canonical order.
pub fn verify(cfg: &ConstructionConfig, opts: &VerifyOptions) -> Result<VerificationReport> {
    let u = Universe::build(cfg.clone())?;
    let want = |s: Suite| opts.suites.contains(&s);
    let (identity, lab) = std::thread::scope(|scope| {
        let u = &u;
        let g = want(Suite::Gamma).then(|| scope.spawn(move || timed(opts.timings, || gamma_suite(u))));
        let f = want(Suite::Functional).then(|| scope.spawn(move || timed(opts.timings, || functional_suite(u))));
        let s = want(Suite::Shift)
            .then(|| scope.spawn(move || timed(opts.timings, || shift_suite(u, opts.seed, opts.duality_pairs))));
        let lab = (want(Suite::Sequence) || want(Suite::Estimates)).then(|| Lab::build(cfg));
        let join =
            |h: Option<std::thread::ScopedJoinHandle<'_, _>>| h.map(|h| h.join().expect("suite thread panicked"));
        ([join(g), join(f), join(s)], lab)
    });
    let mut suites = Vec::new();
    for (res, ms) in identity.into_iter().flatten() {
        let mut rep: SuiteReport = res?;
        rep.elapsed_ms = ms;
        suites.push(rep);
    }
    if let Some(lab) = &lab {
        if want(Suite::Sequence) {
            let (mut rep, ms) = timed(opts.timings, || sequence_suite(lab));
            rep.elapsed_ms = ms;
            suites.push(rep);
        }
        if want(Suite::Estimates) {
            let (rep, ms) = timed(opts.timings, || estimates_suite(lab));
            let mut rep = rep?;
            rep.elapsed_ms = ms;
            suites.push(rep);
        }
    }
    let status = suites.iter().fold(Status::Pass, |s, r| s.worst(r.status));
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.into(),
        seed: opts.seed,
        elements: u.len(),
        levels: level_counts(&u),
        regime_notes: regime_notes(cfg),
        net_notes: net_notes(&u),
        suites,
        status,
    })
}
