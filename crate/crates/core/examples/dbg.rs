use kahlerlift::geometry::{catalog, CatalogParams};
use kahlerlift::hodge::*;
use kahlerlift::lift::TangentGeometry;
use std::sync::Arc;

fn main() {
    let g = catalog("product_spheres", &CatalogParams::default()).unwrap();
    for x in g.sample_points(2, 29) {
        let wb = weyl_blocks(&g, &x).unwrap();
        println!("scal={:.6} w_plus diag = {:.6} {:.6} {:.6}", wb.scal, wb.w_plus[(0,0)], wb.w_plus[(1,1)], wb.w_plus[(2,2)]);
        println!("  w_plus offdiag max = {:.3e}", (wb.w_plus.clone() - nalgebra::DMatrix::from_fn(3,3,|i,j| if i==j {wb.w_plus[(i,i)]} else {0.0})).amax());
    }
    // failing frame point for the sphere lift
    let base = Arc::new(catalog("sphere", &CatalogParams::default()).unwrap());
    let tg = Arc::new(TangentGeometry::lift(base).unwrap());
    let geom4 = tg.as_geometry();
    let p = vec![0.8037746811743208, 0.3365477164103793, 1.1959848962717108, -1.5130551714297344];
    let gm = geom4.metric_values(&p);
    println!("g~ = {gm:.4}");
    match adapted_frame(&geom4, &p) {
        Ok(f) => println!("frame ok, residual {:.3e}", f.residual),
        Err(e) => println!("frame error: {e}"),
    }
}
