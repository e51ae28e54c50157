use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;

use posner::align::{align_trajectory, skip_count, time_average, Weighting, DEFAULT_SKIP_FRACTION};
use posner::ffopt::{minimize_s6, relax, s6_starts, OptimizerConfig, PairPotentialParams};
use posner::io::report::{self, files, ReportBundle, RunMetadata};
use posner::io::{parse_traj, write_xyz};
use posner::posnergen::{
    build_cube_seed, build_template, enumerate_rotated, scale_set, GenerationMode, GenerationScheme, PhosphateTemplate,
    TemplateGroup,
};
use posner::symdetect::{detect_point_group, PointGroup};
use posner::trajstats::{
    eigenmode_displacements, energy_stats, formation_check, kmeans, occurrence_histogram, pca_weighted, persistence_stats,
    select_k, symmetry_timeline,
};
use posner::{Structure, Trajectory};

use crate::output::{read, OutDir};
use crate::{usage, Command, Failure};

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Generate(a) => generate(a),
        Command::Detect(a) => detect(a),
        Command::Timeline(a) => timeline(a),
        Command::Average(a) => average(a),
        Command::Pca(a) => pca_cmd(a),
        Command::Cluster(a) => cluster(a),
        Command::EnergyStats(a) => energy(a),
        Command::S6min(a) => s6min(a),
        Command::Formation(a) => formation(a),
        Command::Report(a) => report_cmd(a),
    }
}

fn check_tol(tol: f64) -> Outcome {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(usage(format!("--tol must be positive, got {tol}")));
    }
    Ok(())
}

fn load_traj(path: &Path, timestep: Option<f64>) -> Result<Trajectory, Failure> {
    let mut traj = parse_traj(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(dt) = timestep {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(usage(format!("--timestep-fs must be positive, got {dt}")));
        }
        traj.timestep_fs = dt;
    }
    traj.label = path.display().to_string();
    Ok(traj)
}

fn metadata(source: &Path) -> RunMetadata {
    RunMetadata { source: Some(source.display().to_string()), ..RunMetadata::new() }
}

fn label(s: &Structure, tol: f64) -> String {
    detect_point_group(s, tol).label.to_string()
}

/// Frames kept after the skip, superposed onto the reference.
struct Retained {
    skip: usize,
    reference: usize,
    frames: Trajectory,
}

fn retain(traj: &Trajectory, r: &crate::Retention) -> Result<Retained, Failure> {
    let skip = match (r.skip, r.skip_fraction) {
        (Some(n), _) => {
            if n >= traj.len() {
                return Err(Failure::Data(anyhow!("skipping {n} of {} frames leaves nothing", traj.len())));
            }
            n
        }
        (None, f) => skip_count(traj.len(), f.unwrap_or(DEFAULT_SKIP_FRACTION)).map_err(|e| usage(e.to_string()))?,
    };
    let reference = r.reference.unwrap_or(skip);
    let ref_frame = traj
        .frames()
        .get(reference)
        .ok_or_else(|| usage(format!("--ref {reference} out of range for {} frames", traj.len())))?;
    let kept = traj.with_frames(traj.frames()[skip..].to_vec()).map_err(anyhow::Error::from)?;
    let frames = align_trajectory(&kept, ref_frame).map_err(anyhow::Error::from)?;
    Ok(Retained { skip, reference, frames })
}

fn generate(a: crate::GenerateArgs) -> Outcome {
    if !(a.diagonal > 0.0) {
        return Err(usage("--diagonal must be positive"));
    }
    let scheme = GenerationScheme {
        rotation_step: a.step,
        modes: vec![
            GenerationMode::UniformAllGroups,
            GenerationMode::PerGroupSweep,
            GenerationMode::FullProductCapped { cap: a.cap },
        ],
        scale_factors: a.scales.clone(),
        seed: a.seed,
    };
    scheme.validate().map_err(|e| usage(e.to_string()))?;
    let seed = build_cube_seed(a.diagonal, &PhosphateTemplate::default()).map_err(anyhow::Error::from)?;
    let rotated = enumerate_rotated(&seed, &scheme).map_err(anyhow::Error::from)?;
    let scaled = scale_set(&rotated, &scheme.scale_factors, 0).map_err(anyhow::Error::from)?;

    let out = OutDir::create(&a.out)?;
    let mut templates = BTreeMap::new();
    for g in TemplateGroup::ALL {
        let s = build_template(g).map_err(anyhow::Error::from)?;
        templates.insert(g.to_string(), label(&s, 1e-3));
        out.write(&format!("template_{g}.xyz"), &write_xyz(&s.with_label(format!("{g} template"))))?;
    }
    if !a.census_only {
        out.write("rotated.xyz", &posner::io::xyz::write_frames(&rotated))?;
        out.write("scaled.xyz", &posner::io::xyz::write_frames(&scaled))?;
    }
    let census = report::GenerationCensus {
        metadata: RunMetadata { seed: Some(a.seed), ..RunMetadata::new() },
        diagonal: a.diagonal,
        rotation_step: a.step,
        scale_factors: a.scales.clone(),
        modes: scheme.modes.iter().map(|m| m.to_string()).collect(),
        rotated: rotated.len(),
        scaled: scaled.len(),
        templates,
    };
    out.json(files::CENSUS, &census)?;
    println!("rotated {}  scaled {}", census.rotated, census.scaled);

    let defaults = a.step == 30.0 && a.cap == 3000 && a.scales.len() == 4 && a.diagonal == 9.0;
    if defaults && (census.rotated < 2800 || census.scaled < 10_000) {
        return Err(Failure::Data(anyhow!(
            "default scheme produced {} rotated / {} scaled structures, expected at least 2800 / 10000",
            census.rotated,
            census.scaled
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Detection<'a> {
    frame: usize,
    #[serde(flatten)]
    group: &'a PointGroup,
}

fn detect(a: crate::DetectArgs) -> Outcome {
    check_tol(a.tol)?;
    let frames = posner::io::xyz::parse_frames(&read(&a.file)?).with_context(|| format!("parsing {}", a.file.display()))?;
    let groups: Vec<PointGroup> = frames.iter().map(|f| detect_point_group(f, a.tol)).collect();
    if a.json {
        let rows: Vec<Detection> = groups.iter().enumerate().map(|(frame, group)| Detection { frame, group }).collect();
        let text = if rows.len() == 1 { serde_json::to_string_pretty(&rows[0]) } else { serde_json::to_string_pretty(&rows) };
        println!("{}", text.map_err(anyhow::Error::from)?);
        return Ok(());
    }
    let mut text = String::new();
    for (i, g) in groups.iter().enumerate() {
        if groups.len() > 1 {
            let _ = writeln!(text, "frame {i}");
        }
        let order = g.order.map_or("infinite".to_string(), |o| o.to_string());
        let _ = writeln!(text, "{}", g.label);
        let _ = writeln!(text, "order {order}  tolerance {}", a.tol);
        for e in &g.elements {
            let _ = writeln!(text, "  {:<6} {:.6}", e.kind.to_string(), e.score);
        }
    }
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct SegmentRow<'a> {
    start_frame: usize,
    end_frame: usize,
    label: &'a str,
    frames: usize,
    duration_fs: f64,
}

fn timeline(a: crate::TimelineArgs) -> Outcome {
    check_tol(a.tol)?;
    let traj = load_traj(&a.traj, Some(a.timestep_fs))?;
    if a.skip >= traj.len() {
        return Err(Failure::Data(anyhow!("--skip {} leaves no frames of {}", a.skip, traj.len())));
    }
    let tl = symmetry_timeline(&traj, a.tol, a.skip).map_err(anyhow::Error::from)?;
    let occurrence = occurrence_histogram(&tl).map_err(anyhow::Error::from)?;
    let persistence = persistence_stats(&tl).map_err(anyhow::Error::from)?;

    let out = OutDir::create(&a.out)?;
    out.csv(
        "timeline.csv",
        tl.iter().map(|s| SegmentRow {
            start_frame: s.start_frame,
            end_frame: s.end_frame,
            label: &s.label,
            frames: s.frames(),
            duration_fs: s.duration_fs,
        }),
    )?;
    out.json("occurrence.json", &occurrence)?;
    out.json("persistence.json", &persistence)?;
    let meta = RunMetadata {
        tolerance: Some(a.tol),
        skip_frames: Some(a.skip),
        timestep_fs: Some(a.timestep_fs),
        ..metadata(&a.traj)
    };
    let section = report::TimelineSection { metadata: meta, frames: traj.len() - a.skip, segments: tl, occurrence, persistence };
    out.json(files::TIMELINE, &section)?;
    for (label, pct) in &section.occurrence {
        let p = &section.persistence[label];
        println!("{label:<5} {pct:7.3}%  segments {:<4} max {:.1} fs  mean {:.1} fs", p.segment_count, p.max_duration_fs, p.mean_duration_fs);
    }
    Ok(())
}

fn reference_note(r: &Retained) -> String {
    format!("frame {}", r.reference)
}

fn retention_meta(meta: RunMetadata, r: &Retained, args: &crate::Retention) -> RunMetadata {
    RunMetadata {
        skip_frames: Some(r.skip),
        skip_fraction: if args.skip.is_none() { Some(args.skip_fraction.unwrap_or(DEFAULT_SKIP_FRACTION)) } else { None },
        ..meta
    }
}

fn average(a: crate::AverageArgs) -> Outcome {
    check_tol(a.tol)?;
    let traj = load_traj(&a.input.traj, a.input.timestep_fs)?;
    let r = retain(&traj, &a.retention)?;
    let avg = time_average(&r.frames, 0.0).map_err(anyhow::Error::from)?;
    let g = detect_point_group(&avg, a.tol);
    let out = OutDir::create(&a.out)?;
    out.write("average.xyz", &write_xyz(&avg))?;
    let section = report::AverageSection {
        metadata: retention_meta(RunMetadata { tolerance: Some(a.tol), ..metadata(&a.input.traj) }, &r, &a.retention),
        reference: reference_note(&r),
        frames_used: r.frames.len(),
        label: g.label.to_string(),
        order: g.order,
    };
    out.json(files::AVERAGE, &section)?;
    println!("{} (average of {} frames)", section.label, section.frames_used);
    Ok(())
}

#[derive(Serialize)]
struct EigenRow {
    mode: usize,
    eigenvalue: f64,
    explained_fraction: f64,
    cumulative_fraction: f64,
}

#[derive(Serialize)]
struct DisplacementRow {
    atom: usize,
    element: String,
    dx: f64,
    dy: f64,
    dz: f64,
    magnitude: f64,
}

fn pca_cmd(a: crate::PcaArgs) -> Outcome {
    check_tol(a.tol)?;
    let traj = load_traj(&a.input.traj, a.input.timestep_fs)?;
    let r = retain(&traj, &a.retention)?;
    let weighting = if a.mass_weighted { Weighting::Mass } else { Weighting::Equal };
    let p = pca_weighted(r.frames.frames(), weighting).map_err(anyhow::Error::from)?;
    let n_modes = a.modes.min(p.modes());
    let out = OutDir::create(&a.out)?;

    let mut cumulative = 0.0;
    out.csv(
        "eigenvalues.csv",
        p.eigenvalues.iter().zip(&p.explained_fraction).enumerate().map(|(mode, (v, f))| {
            cumulative += f;
            EigenRow { mode, eigenvalue: *v, explained_fraction: *f, cumulative_fraction: cumulative }
        }),
    )?;
    out.write("mean.xyz", &write_xyz(&p.mean))?;

    let mut modes = Vec::new();
    for m in 0..n_modes {
        let d = eigenmode_displacements(&p, m, None).map_err(anyhow::Error::from)?;
        out.csv(
            &format!("mode_{m}.csv"),
            d.vectors.iter().enumerate().map(|(atom, v)| DisplacementRow {
                atom,
                element: p.mean.elements()[atom].to_string(),
                dx: v.x,
                dy: v.y,
                dz: v.z,
                magnitude: v.norm(),
            }),
        )?;
        let plus = p.displaced(m, d.amplitude).map_err(anyhow::Error::from)?;
        let minus = p.displaced(m, -d.amplitude).map_err(anyhow::Error::from)?;
        modes.push(report::ModeSummary {
            mode: m,
            eigenvalue: p.eigenvalues[m],
            explained_fraction: p.explained_fraction[m],
            max_displacement: d.max_magnitude,
            plus_label: label(&plus, a.tol),
            minus_label: label(&minus, a.tol),
        });
    }
    let section = report::PcaSection {
        metadata: retention_meta(RunMetadata { tolerance: Some(a.tol), ..metadata(&a.input.traj) }, &r, &a.retention),
        frames: r.frames.len(),
        mass_weighted: a.mass_weighted,
        mean_label: label(&p.mean, a.tol),
        total_variance: p.eigenvalues.iter().sum(),
        modes,
    };
    out.json(files::PCA, &section)?;
    for m in &section.modes {
        println!(
            "mode {}  λ {:.6}  {:.2}%  max {:.3} Å  {} / {}",
            m.mode,
            m.eigenvalue,
            100.0 * m.explained_fraction,
            m.max_displacement,
            m.plus_label,
            m.minus_label
        );
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<std::ops::RangeInclusive<usize>, Failure> {
    let bad = || usage(format!("--k-range must look like 2..6, got `{text}`"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let (lo, hi): (usize, usize) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo < 2 || hi < lo {
        return Err(bad());
    }
    Ok(lo..=hi)
}

#[derive(Serialize)]
struct AssignmentRow {
    frame: usize,
    cluster: usize,
}

#[derive(Serialize)]
struct SilhouetteRow {
    k: usize,
    silhouette: f64,
}

fn cluster(a: crate::ClusterArgs) -> Outcome {
    check_tol(a.tol)?;
    let range = parse_range(&a.k_range)?;
    let fixed: Option<usize> = match a.k.as_str() {
        "auto" => None,
        n => Some(n.parse().map_err(|_| usage(format!("--k must be a count or `auto`, got `{n}`")))?),
    };
    let traj = load_traj(&a.input.traj, a.input.timestep_fs)?;
    let r = retain(&traj, &a.retention)?;
    let selection = match fixed {
        Some(_) => None,
        None => {
            if *range.end() > r.frames.len() {
                return Err(Failure::Data(anyhow!("--k-range exceeds the {} retained frames", r.frames.len())));
            }
            Some(select_k(&r.frames, range, a.seed).map_err(anyhow::Error::from)?)
        }
    };
    let k = fixed.or(selection.as_ref().map(|s| s.k)).expect("k chosen");
    let c = kmeans(&r.frames, k, a.seed).map_err(anyhow::Error::from)?;

    let out = OutDir::create(&a.out)?;
    out.csv(
        "assignments.csv",
        c.assignments.iter().enumerate().map(|(i, cl)| AssignmentRow { frame: r.skip + i, cluster: *cl }),
    )?;
    if let Some(sel) = &selection {
        out.csv("silhouette.csv", sel.silhouettes.iter().map(|(k, s)| SilhouetteRow { k: *k, silhouette: *s }))?;
    }
    let mut centroid_labels = Vec::new();
    for (i, s) in c.centroids.iter().enumerate() {
        out.write(&format!("centroid_{i}.xyz"), &write_xyz(s))?;
        centroid_labels.push(label(s, a.tol));
    }
    let mut sizes = vec![0; k];
    c.assignments.iter().for_each(|x| sizes[*x] += 1);
    let section = report::ClusterSection {
        metadata: retention_meta(
            RunMetadata { tolerance: Some(a.tol), seed: Some(a.seed), ..metadata(&a.input.traj) },
            &r,
            &a.retention,
        ),
        k,
        selection,
        inertia: c.inertia,
        silhouette: c.silhouette,
        sizes,
        centroid_labels,
    };
    out.json(files::CLUSTERS, &section)?;
    println!("k = {}  silhouette {:.4}", section.k, section.silhouette);
    for (i, (n, l)) in section.sizes.iter().zip(&section.centroid_labels).enumerate() {
        println!("cluster {i}: {n} frames, centroid {l}");
    }
    Ok(())
}

fn energy(a: crate::EnergyArgs) -> Outcome {
    if a.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let traj = load_traj(&a.traj, None)?;
    let stats = energy_stats(&traj, a.bins).map_err(anyhow::Error::from)?;
    let section = report::EnergySection { metadata: metadata(&a.traj), stats };
    if let Some(dir) = &a.out {
        OutDir::create(dir)?.json(files::ENERGY, &section)?;
    }
    print!("{}", report::to_json(&section.stats));
    Ok(())
}

fn s6min(a: crate::S6Args) -> Outcome {
    check_tol(a.tol)?;
    if a.starts == 0 {
        return Err(usage("--starts must be at least 1"));
    }
    let params = match &a.potential {
        Some(path) => PairPotentialParams::from_toml_str(&read(path)?).with_context(|| format!("reading {}", path.display()))?,
        None => PairPotentialParams::default(),
    };
    let cfg = OptimizerConfig { max_evaluations: a.max_evaluations, seed: a.seed, ..OptimizerConfig::default() };
    let starts = s6_starts(a.starts, a.seed);
    let best = minimize_s6(&starts, &params, &cfg).map_err(anyhow::Error::from)?;
    let relaxed = relax(&best.structure, &params, &cfg).map_err(anyhow::Error::from)?;

    let out = OutDir::create(&a.out)?;
    out.write("s6min.xyz", &write_xyz(&best.structure))?;
    out.write("relaxed.xyz", &write_xyz(&relaxed.structure.clone().with_label("unconstrained relaxation")))?;
    let section = report::S6Section {
        metadata: RunMetadata { seed: Some(a.seed), tolerance: Some(a.tol), ..RunMetadata::new() },
        starts: a.starts,
        best_start: best.start,
        params: best.params,
        energy: best.energy,
        label: label(&best.structure, 1e-6),
        relaxed_energy: relaxed.energy,
        relaxed_label: label(&relaxed.structure, a.tol),
        relaxed_converged: relaxed.converged,
    };
    out.json(files::S6MIN, &section)?;
    println!("S6 minimum {:.6} eV (start {}), label {}", section.energy, section.best_start, section.label);
    println!("unconstrained relaxation {:.6} eV, label {}", section.relaxed_energy, section.relaxed_label);
    Ok(())
}

fn formation(a: crate::FormationArgs) -> Outcome {
    let f = formation_check(a.cluster, a.unit, a.n).map_err(|e| usage(e.to_string()))?;
    let section = report::FormationSection { e_cluster: a.cluster, e_unit: a.unit, n: a.n, result: f };
    print!("{}", report::to_json(&section));
    Ok(())
}

fn section<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>, Failure> {
    let path = dir.join(name);
    if !path.exists() {
        return Ok(None);
    }
    let text = read(&path)?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

fn report_cmd(a: crate::ReportArgs) -> Outcome {
    if !a.rundir.is_dir() {
        return Err(Failure::Data(anyhow!("{} is not a directory", a.rundir.display())));
    }
    let d = &a.rundir;
    let bundle = ReportBundle {
        metadata: RunMetadata::new(),
        timeline: section(d, files::TIMELINE)?,
        average: section(d, files::AVERAGE)?,
        pca: section(d, files::PCA)?,
        clusters: section(d, files::CLUSTERS)?,
        energy: section(d, files::ENERGY)?,
        generation: section(d, files::CENSUS)?,
        s6min: section(d, files::S6MIN)?,
    };
    let present = [
        bundle.timeline.is_some(),
        bundle.average.is_some(),
        bundle.pca.is_some(),
        bundle.clusters.is_some(),
        bundle.energy.is_some(),
        bundle.generation.is_some(),
        bundle.s6min.is_some(),
    ];
    if !present.iter().any(|p| *p) {
        return Err(Failure::Data(anyhow!("no report sections found in {}", d.display())));
    }
    let path = a.out.clone().unwrap_or_else(|| d.join(files::REPORT));
    crate::output::write_atomic(&path, &report::to_json(&bundle))?;
    println!("{}", path.display());
    Ok(())
}
