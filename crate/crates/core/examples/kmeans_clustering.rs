//! k-means++ on three noisy 2-D blobs, with representatives per cluster.
//!
//! cargo run --example kmeans_clustering -- [seed]

use chainsum::clustering::{choose_k, kmeans, representatives, DEFAULT_MAX_ITERS, DEFAULT_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(7);
    let centers = [(0.0, 0.0), (5.0, 1.0), (2.0, 6.0)];
    let mut points = Vec::new();
    for i in 0..30 {
        let (cx, cy) = centers[i % 3];
        // cheap deterministic jitter
        let jx = ((i * 37 % 11) as f64 - 5.0) / 10.0;
        let jy = ((i * 53 % 13) as f64 - 6.0) / 10.0;
        points.push(vec![cx + jx, cy + jy]);
    }

    println!(
        "auto k for {} points: {}",
        points.len(),
        choose_k(points.len(), None)
    );
    let a = kmeans(&points, 3, seed, DEFAULT_MAX_ITERS, DEFAULT_TOL)?;
    println!("inertia {:.4} after {} iterations", a.inertia, a.iterations);
    println!("inertia per iteration: {:?}", a.inertia_history);
    println!("labels: {:?}", a.labels);
    let reps = representatives(&a, &points, 3);
    for (id, c) in a.centroids.iter().enumerate() {
        println!(
            "cluster {id}: centroid ({:.2}, {:.2}), size {}, nearest {:?}",
            c[0],
            c[1],
            a.cluster_sizes()[id],
            reps.for_cluster(id)
        );
    }
    Ok(())
}
