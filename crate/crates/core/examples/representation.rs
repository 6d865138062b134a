//! Compare a metric space with an embedding space: PCA of both, cross-space
//! Spearman correlations, canonical correlations and a 2-D projection.
//!
//! Usage: `representation [METRICS.csv EMBEDDINGS.csv]`; both files have an
//! id column followed by numeric columns. Without arguments two synthetic
//! spaces that share one latent factor are used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resfault::repr::{orthogonality_report, IdMatrix};

fn synthetic() -> resfault::Result<(IdMatrix, IdMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 500;
    let ids: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
    let mut metrics = Vec::new();
    let mut embeddings = Vec::new();
    for _ in 0..n {
        let shared: f64 = rng.random_range(-1.0..1.0);
        metrics.push((0..8).map(|j| if j == 0 { shared } else { rng.random_range(-1.0..1.0) }).collect());
        embeddings.push((0..16).map(|j| if j == 3 { shared + 0.3 * rng.random_range(-1.0..1.0) } else { rng.random_range(-1.0..1.0) }).collect());
    }
    let names = |p: &str, d: usize| (0..d).map(|j| format!("{p}{j}")).collect();
    Ok((
        IdMatrix::new(ids.clone(), names("metric", 8), metrics)?,
        IdMatrix::new(ids, names("emb", 16), embeddings)?,
    ))
}

fn main() -> resfault::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (metrics, embeddings) = if args.len() == 2 {
        (
            IdMatrix::read_csv(std::path::Path::new(&args[0]))?,
            IdMatrix::read_csv(std::path::Path::new(&args[1]))?,
        )
    } else {
        synthetic()?
    };
    let (report, points) = orthogonality_report(&metrics, &embeddings, 0.95)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!("cluster,component,x,y");
    for p in points {
        let c = p.component.map(|c| c.to_string()).unwrap_or_default();
        println!("{},{c},{:.3},{:.3}", p.cluster, p.x, p.y);
    }
    Ok(())
}
