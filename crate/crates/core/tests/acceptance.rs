//! Acceptance suite: one line per criterion, all tolerances zero.
//!
//! Runs as a plain binary (`harness = false`) so the per-criterion lines
//! are always printed; the process exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use cga_core::realizations::{
    build_free_general, build_free_l1, build_osc_l1, build_triplet, build_xi0, xi0_triplet, Convention,
    GeneratorFamily, ParamValue,
};
use cga_core::report::{Document, Section, Status};
use cga_core::scalar::{rat, rat_int, Coef, Rational};
use cga_core::spectrum::{
    continuous_probe, ground_state_verify, ladder_relations_check, spectrum_by_quanta, spectrum_table,
    SpectrumFamily,
};
use cga_core::verify::{
    calibrate_constants, calibrated_free_l1, structure_table_l1, jacobi_section, omega_rigidity, onshell_check,
    onshell_l1, triplet_named, verify_general_invariant, verify_similarity, verify_sl2,
    verify_subalgebra_structure, verify_table, xi0_invariance, OnShellOutcome, Picture,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn sym() -> ParamValue {
    ParamValue::Symbolic
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn passed(s: &Section) -> Result<(), String> {
    ensure(s.passed(), || {
        let first: Vec<String> = s
            .failures()
            .take(3)
            .map(|r| format!("{} ({})", r.lhs, r.residual_text))
            .collect();
        format!("{} / {}: {} {:?}", s.family, s.name, first.join("; "), s.errors)
    })
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c1_osc_table() -> Check {
    let fam = build_osc_l1(&sym(), &sym()).map_err(e)?;
    let s = verify_table(&fam, &structure_table_l1(&fam).map_err(e)?).map_err(e)?;
    passed(&s)?;
    ensure(s.count(Status::Exact) == 66, || format!("{} exact of 66", s.count(Status::Exact)))?;
    Ok("66/66 pairs exact".into())
}

fn c2_free_calibration() -> Check {
    let fam = build_free_l1(&sym(), &sym()).map_err(e)?;
    let (cal, s) = calibrate_constants(&fam, &structure_table_l1(&fam).map_err(e)?).map_err(e)?;
    passed(&s)?;
    ensure(cal.deltas.len() == 1 && cal.deltas.get("z0") == Some(&Coef::int(-2)), || {
        format!("unexpected shifts {:?}", cal.texts())
    })?;
    Ok(format!("consistent, shifts {:?}", cal.texts()))
}

fn c3_onshell() -> Check {
    let (free, _) = calibrated_free_l1(&sym(), &sym()).map_err(e)?;
    let osc = build_osc_l1(&sym(), &sym()).map_err(e)?;
    let mut nonzero = 0;
    for fam in [&free, &osc] {
        let s = onshell_l1(fam).map_err(e)?;
        passed(&s)?;
        nonzero += s.records.iter().filter(|r| r.factor_text != "commutes").count();
        let tr = build_triplet(fam).map_err(e)?;
        for w in onshell_check(fam, &triplet_named(&tr)).map_err(e)? {
            if let OnShellOutcome::Factor(f) = &w.outcome {
                ensure(f.is_derivative_free(), || format!("{} has a differential factor", w.generator))?;
            }
        }
    }
    Ok(format!("72 pairs, {nonzero} nonzero multipliers"))
}

fn c4_sl2() -> Check {
    let (free, _) = calibrated_free_l1(&sym(), &sym()).map_err(e)?;
    let osc = build_osc_l1(&sym(), &sym()).map_err(e)?;
    for fam in [&free, &osc] {
        let tr = build_triplet(fam).map_err(e)?;
        ensure(verify_sl2(&tr, &rat_int(1)).map_err(e)?, || format!("{} triplet", fam.name))?;
    }
    for (w1, w2) in [(1, 1), (2, 3)] {
        let f = build_xi0(&rat_int(w1), &rat_int(w2), &sym(), 0, Convention::Corrected).map_err(e)?;
        let tr = xi0_triplet(&f).map_err(e)?;
        ensure(verify_sl2(&tr, &rat_int(w2)).map_err(e)?, || format!("xi0({w1},{w2}) triplet"))?;
    }
    Ok("free, osc, xi0(1,1), xi0(2,3)".into())
}

fn c5_rigidity() -> Check {
    let mut failing = Vec::new();
    for picture in [Picture::Osc, Picture::Free] {
        passed(&omega_rigidity(picture, &rat_int(1)).map_err(e)?)?;
        let s = omega_rigidity(picture, &rat_int(2)).map_err(e)?;
        ensure(!s.passed(), || format!("{picture:?} picture passes at omega = 2"))?;
        failing = s.failures().map(|r| r.lhs.clone()).collect();
    }
    Ok(format!("omega = 1 invariant; omega = 2 fails on {}", failing.join(", ")))
}

fn c6_spectrum_l1() -> Check {
    let f = SpectrumFamily::osc(&sym(), &sym()).map_err(e)?;
    ensure(ground_state_verify(&f).map_err(e)?, || "ground state".into())?;
    let t = spectrum_table(&f, &rat_int(6), 3).map_err(e)?;
    ensure(t.all_verified(), || "an eigencheck failed".into())?;
    for level in 0..=6 {
        let n = t.multiplicities.get(&rat_int(level)).copied().unwrap_or(0);
        ensure(n == level as u64 + 1, || format!("level {level} has multiplicity {n}"))?;
    }
    ensure(t.rows.len() == 28 * 4, || format!("{} rows", t.rows.len()))?;
    Ok(format!("{} states verified", t.rows.len()))
}

fn c7_continuous() -> Check {
    for l in [rat_int(0), rat_int(1), rat(7, 3), rat(-1, 4)] {
        let got = continuous_probe(&sym(), &sym(), &l).map_err(e)?;
        ensure(got == l, || format!("lambda {l} gave {got}"))?;
    }
    Ok("lambda in {0, 1, 7/3, -1/4}".into())
}

fn c8_general() -> Check {
    let mut states = 0;
    for l in 1..=4 {
        passed(&verify_general_invariant(l, Convention::Corrected).map_err(e)?)?;
        let f = SpectrumFamily::ladder(l).map_err(e)?;
        ensure(ground_state_verify(&f).map_err(e)?, || format!("ground state l = {l}"))?;
        passed(&ladder_relations_check(&f).map_err(e)?)?;
        let t = spectrum_table(&f, &rat_int(6), 1).map_err(e)?;
        ensure(t.all_verified(), || format!("spectrum l = {l}"))?;
        states += t.rows.len();
    }
    Ok(format!("l = 1..4, {states} states verified"))
}

fn c9_xi0() -> Check {
    for (w1, w2) in [(1, 1), (2, 3)] {
        let f = SpectrumFamily::xi0(&rat_int(w1), &rat_int(w2), &sym()).map_err(e)?;
        passed(&ladder_relations_check(&f).map_err(e)?)?;
    }
    let f = SpectrumFamily::xi0(&rat_int(2), &rat_int(3), &sym()).map_err(e)?;
    ensure(ground_state_verify(&f).map_err(e)?, || "xi0 ground state".into())?;
    let t = spectrum_by_quanta(&f, 5, 1).map_err(e)?;
    ensure(t.all_verified(), || "two-frequency eigencheck".into())?;
    let mut want: Vec<Rational> = Vec::new();
    for m in 0..=5i64 {
        for n in 0..=5 - m {
            want.push(rat_int(2 * m + 3 * n));
        }
    }
    want.sort();
    want.dedup();
    ensure(t.levels() == want, || format!("levels {:?}", t.levels()))?;

    let fam = build_xi0(&rat_int(2), &rat_int(3), &sym(), 3, Convention::Corrected).map_err(e)?;
    let s = verify_subalgebra_structure(&fam, 3).map_err(e)?;
    passed(&s)?;
    for sec in xi0_invariance(&fam).map_err(e)? {
        passed(&sec)?;
    }
    Ok(format!("{} relations, {} states", s.records.len(), t.rows.len()))
}

fn c10_similarity() -> Check {
    let s = verify_similarity().map_err(e)?;
    let main: Vec<_> = s.records.iter().filter(|r| r.family == "free-l1").collect();
    ensure(main.len() == 15, || format!("{} diff lines", main.len()))?;
    for r in &main {
        ensure(matches!(r.status, Status::Exact | Status::ConstantShift), || {
            format!("{} is {}", r.lhs, r.status.as_str())
        })?;
    }
    let shifts: Vec<String> = main
        .iter()
        .filter(|r| r.status == Status::ConstantShift)
        .map(|r| format!("{} ({})", r.lhs, r.residual_text))
        .collect();
    Ok(format!("15 images, constant shifts: {}", shifts.join(", ")))
}

fn families() -> Result<Vec<GeneratorFamily>, String> {
    let mut out = vec![
        build_free_l1(&sym(), &sym()).map_err(e)?,
        calibrated_free_l1(&sym(), &sym()).map_err(e)?.0,
        build_osc_l1(&sym(), &sym()).map_err(e)?,
    ];
    for l in 1..=4 {
        for conv in [Convention::Verbatim, Convention::Corrected] {
            out.push(build_free_general(l, conv).map_err(e)?);
        }
    }
    for (w1, w2) in [(1, 1), (2, 3)] {
        for conv in [Convention::Verbatim, Convention::Corrected] {
            out.push(build_xi0(&rat_int(w1), &rat_int(w2), &sym(), 1, conv).map_err(e)?);
        }
    }
    Ok(out)
}

fn report_bytes() -> Result<(String, String), String> {
    let mut sections = cga_core::verify::l1_suite(Picture::Free, &sym(), &sym(), true).map_err(e)?;
    sections.push(verify_similarity().map_err(e)?);
    let f = SpectrumFamily::osc(&sym(), &sym()).map_err(e)?;
    sections.push(spectrum_table(&f, &rat_int(2), 1).map_err(e)?.to_section());
    let d = Document::new("all", sections);
    Ok((d.to_json(), d.to_markdown()))
}

fn c11_properties() -> Check {
    let mut triples = 0u64;
    for fam in families()? {
        let s = jacobi_section(&fam).map_err(e)?;
        passed(&s)?;
        triples += s.records[0]
            .lhs
            .split_whitespace()
            .nth(2)
            .and_then(|n| n.parse::<u64>().ok())
            .unwrap_or(0);
    }

    let table = common::mixed_table();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..200 {
        let a = common::random_element(&mut rng, &table);
        let b = common::random_element(&mut rng, &table);
        let c = common::random_element(&mut rng, &table);
        let left = a.mul(&b).and_then(|ab| ab.mul(&c)).map_err(e)?;
        let right = b.mul(&c).and_then(|bc| a.mul(&bc)).map_err(e)?;
        ensure(left == right, || format!("associativity sample {i}"))?;
        let f = common::random_state(&mut rng, &table);
        let composed = a.mul(&b).and_then(|ab| ab.apply(&f)).map_err(e)?;
        let stepwise = b.apply(&f).and_then(|bf| a.apply(&bf)).map_err(e)?;
        ensure(composed == stepwise, || format!("apply composition sample {i}"))?;
    }

    let first = report_bytes()?;
    let second = report_bytes()?;
    ensure(first == second, || "reports differ between runs".into())?;
    Ok(format!("{triples} jacobi triples, 200 random samples, reports byte-identical"))
}

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "structure constants, oscillator picture", limit: Some(Duration::from_secs(5)), run: c1_osc_table },
        Criterion { id: 2, title: "structure constants, free picture after calibration", limit: Some(Duration::from_secs(5)), run: c2_free_calibration },
        Criterion { id: 3, title: "on-shell multipliers", limit: None, run: c3_onshell },
        Criterion { id: 4, title: "sl(2) closure of the invariant triplets", limit: None, run: c4_sl2 },
        Criterion { id: 5, title: "omega rigidity", limit: None, run: c5_rigidity },
        Criterion { id: 6, title: "discrete spectrum l = 1", limit: Some(Duration::from_secs(10)), run: c6_spectrum_l1 },
        Criterion { id: 7, title: "continuous spectrum probe", limit: None, run: c7_continuous },
        Criterion { id: 8, title: "general l ladder structure and spectrum", limit: Some(Duration::from_secs(60)), run: c8_general },
        Criterion { id: 9, title: "xi = 0 sector", limit: None, run: c9_xi0 },
        Criterion { id: 10, title: "similarity map", limit: None, run: c10_similarity },
        Criterion { id: 11, title: "property suites", limit: None, run: c11_properties },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let mut outcome = (c.run)();
        let took = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, c.limit) {
            if took > limit {
                outcome = Err(format!("took {took:.2?}, limit {limit:?}"));
            }
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => {
                failed += 1;
                ("FAIL", d.clone())
            }
        };
        println!("criterion {:>2} {tag} {} [{took:.2?}]: {detail}", c.id, c.title);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 11 criteria passed");
}
