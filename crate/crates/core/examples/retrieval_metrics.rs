//! Precision at k, AP(k), mAP and the interpolated PR curve for a small
//! relevance table (1 = same class as the query).

use tissue_hash::eval::{
    average_precision_at_k, interpolated_pr_curve, mean_average_precision, precision_at_k,
    RelevanceTable,
};

fn main() -> tissue_hash::Result<()> {
    let rows = vec![
        vec![1, 0, 1, 1, 0, 0],
        vec![0, 1, 0, 0, 1, 0],
        vec![1, 1, 1, 0, 0, 0],
    ];
    for (i, row) in rows.iter().enumerate() {
        let p: Vec<String> = (1..=row.len())
            .map(|k| format!("{:.3}", precision_at_k(row, k).unwrap()))
            .collect();
        println!("query {i} {row:?}  p(k) = {}", p.join(" "));
    }
    let table = RelevanceTable::new(rows);
    println!("AP(3) = {:.4}", average_precision_at_k(&table, 3)?);
    println!("mAP   = {:.4}", mean_average_precision(&table)?);
    println!("recall  precision");
    for (r, p) in interpolated_pr_curve(&table)?.iter().step_by(4) {
        println!("{r:>6.2}  {p:.4}");
    }
    Ok(())
}
