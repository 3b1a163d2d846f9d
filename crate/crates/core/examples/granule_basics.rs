//! A single fuzzy granule: membership, recursive updates, distance and merge.

use egfc::granule::{distance, merge, Granule};
use egfc::{ClassId, MetaParams};

fn main() -> egfc::Result<()> {
    let band = MetaParams::default().band();
    let mut g = Granule::create(&[0.30, 0.60], Some(ClassId(1)), 1, band);
    println!("new granule at {:?}, sigma {:.4}", g.modal().collect::<Vec<_>>(), band.hi);

    for x in [0.30, 0.35, 0.40, 0.50] {
        println!("  activation at ({x:.2}, 0.60): {:.4}", g.activation(&[x, 0.60])?);
    }

    for (step, x) in [[0.32, 0.58], [0.28, 0.63], [0.31, 0.61]].iter().enumerate() {
        g.absorb(x, step as u64 + 2, band)?;
    }
    println!(
        "after {} samples: modal {:?}, dispersion {:?}",
        g.update_count(),
        g.modal().collect::<Vec<_>>(),
        g.dispersions().collect::<Vec<_>>()
    );

    let near = Granule::create(&[0.34, 0.60], Some(ClassId(1)), 5, band);
    let other = Granule::create(&[0.34, 0.60], Some(ClassId(2)), 5, band);
    println!("distance to a same-class neighbour: {:.4}", distance(&g, &near)?);
    let m = merge(&g, &near, 6, band)?;
    println!(
        "merged: modal {:?}, count {}",
        m.modal().collect::<Vec<_>>(),
        m.update_count()
    );
    match merge(&g, &other, 6, band) {
        Ok(_) => println!("merged across classes?"),
        Err(e) => println!("refused: {e}"),
    }
    Ok(())
}
