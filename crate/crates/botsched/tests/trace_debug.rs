// quick diagnostic via the test harness
#[test]
fn trace_budget_45() {
    let mut s = botsched::cli::load_scenario("table1-small").unwrap();
    s.budget = 45;
    let r = botsched::heuristic::find_plan_traced(&s);
    for e in r.trace.as_ref().unwrap() {
        println!("{:>14}  cost {:>4}  makespan {:>6}", e.phase, e.cost, e.makespan);
    }
    let plan = r.plan().unwrap();
    println!("final: makespan {} cost {} counts {:?}", 
        botsched::model::plan_makespan(plan, &s).unwrap(),
        botsched::model::plan_cost(plan, &s).unwrap(),
        plan.vm_count_by_type());
    for slot in &plan.slots {
        println!("  slot {} type {} tasks {} exec {}", slot.id, slot.type_id, slot.task_ids.len(),
          botsched::model::vm_exec_time(slot, &s).unwrap());
    }
    let mp = botsched::mp_plan(&s);
    let mpp = mp.plan().unwrap();
    println!("MP: makespan {} cost {} slots {}", botsched::model::plan_makespan(mpp, &s).unwrap(), botsched::model::plan_cost(mpp, &s).unwrap(), mpp.slots.len());
}
