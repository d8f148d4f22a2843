use hedseg::projection::{f1_single_tallies, Tallies, UnionSelection};
use hedseg::selftest::{run_selftest, Subject};

/// Greedy union that scans candidates in increasing individual F1.
fn ascending_greedy(t: &Tallies, _: Option<usize>) -> hedseg::Result<UnionSelection> {
    let (seed, seed_report) = f1_single_tallies(t)?;
    let mut order: Vec<_> = t.communities.iter().filter(|c| c.label != seed).collect();
    order.sort_by(|a, b| t.report(a).f1.total_cmp(&t.report(b).f1).then(a.label.cmp(&b.label)));
    let mut labels = vec![seed];
    let mut score = seed_report.f1;
    for c in order {
        labels.push(c.label);
        let next = t.union_report(&labels).f1;
        if next > score {
            score = next;
        } else {
            labels.pop();
        }
    }
    Ok(UnionSelection {
        labels,
        score,
        capped: false,
    })
}

#[test]
fn reversed_greedy_order_is_flagged() {
    let report = run_selftest(&Subject {
        greedy: ascending_greedy,
        ..Subject::default()
    });
    let check = report.checks.iter().find(|c| c.name == "greedy vs oracle").unwrap();
    assert!(!check.passed, "{}", check.detail);
    // dominance still holds; only the agreement rate drops
    assert!(check.detail.contains("0 above oracle"), "{}", check.detail);
    assert!(check.detail.contains("0 below single"), "{}", check.detail);
}

#[test]
fn report_lists_every_check() {
    let report = run_selftest(&Subject::default());
    let text = report.to_string();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert!(text.ends_with("5 checks, 0 failed"));
}
