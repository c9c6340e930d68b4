use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use asram::aln::{EscalationSchedule, OracleFamily};
use asram::asm::parse;
use asram::isa::Program;
use asram::progs;
use asram::value::Value;
use asram::vm::{self, FaultCode, Limits, MachineState, Status};

fn program(src: &str) -> Program {
    parse(&format!(".profile FULL\n{src}")).unwrap()
}

fn none() -> OracleFamily {
    OracleFamily::fixed(vec![])
}

fn random_bits(rng: &mut StdRng, max_bits: u64) -> BigUint {
    let bits = rng.gen_range(0..=max_bits);
    let mut v = BigUint::default();
    for i in 0..bits {
        if rng.gen_bool(0.5) {
            v.set_bit(i, true);
        }
    }
    v
}

/// Bit-by-bit reference for AND, OR and XOR.
fn reference_bool(a: &BigUint, b: &BigUint, f: fn(bool, bool) -> bool) -> BigUint {
    let mut out = BigUint::default();
    for i in 0..a.bits().max(b.bits()) {
        if f(a.bit(i), b.bit(i)) {
            out.set_bit(i, true);
        }
    }
    out
}

#[test]
fn bool_ops_match_bitwise_reference() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..1000 {
        let a = random_bits(&mut rng, 4096);
        let b = random_bits(&mut rng, 4096);
        let mut state = MachineState::new(Value::zero());
        let src = format!("SET r1, {a}\nSET r2, {b}\nAND r3, r1, r2\nOR r4, r1, r2\nXOR r5, r1, r2\nHALT");
        let p = program(&src);
        let out = vm::run_state(&mut state, &p, &none(), &Limits::default());
        assert_eq!(out.status, Status::Halted);
        assert_eq!(state.register_u64(3).as_biguint(), &reference_bool(&a, &b, |x, y| x && y));
        assert_eq!(state.register_u64(4).as_biguint(), &reference_bool(&a, &b, |x, y| x || y));
        assert_eq!(state.register_u64(5).as_biguint(), &reference_bool(&a, &b, |x, y| x != y));
    }
}

#[test]
fn every_instruction_costs_one_step() {
    let p = program("SET r1, 2^100000\nMUL r2, r1, r1\nMOD r3, r2, 7\nSHL r4, r1, 1000\nHALT");
    let out = vm::run(&p, Value::zero(), &none(), &Limits::default());
    assert_eq!(out.steps, 5);
    assert_eq!(out.max_bits, 200_001);
}

#[test]
fn registers_are_sparse() {
    let p = program("SET r1, 2^4000\nSET r2, 9\nSTI r1, r2\nLDI r0, r1\nHALT");
    let mut state = MachineState::new(Value::zero());
    let out = vm::run_state(&mut state, &p, &none(), &Limits::default());
    assert_eq!(out.output, Value::from(9u64));
    assert_eq!(state.register(&Value::pow2(4000)), &Value::from(9u64));
    assert_eq!(state.occupied(), 4);
}

#[test]
fn writing_zero_frees_the_register() {
    let p = program("SET r5, 7\nSET r5, 0\nHALT");
    let mut state = MachineState::new(Value::zero());
    vm::run_state(&mut state, &p, &none(), &Limits::default());
    assert_eq!(state.occupied(), 0);
}

#[test]
fn single_draw_machine_faults_on_second_draw() {
    let p = program("ALN r1\nALN r2\nHALT");
    let aram = OracleFamily::pow2(1).with_draw_limit(1);
    let out = vm::run(&p, Value::zero(), &aram, &Limits::default());
    assert_eq!(out.status, Status::Fault(FaultCode::AlnUnavailable));
    assert_eq!(out.aln_draws.len(), 1);
    assert_eq!(out.output, Value::zero());
    assert!(!out.accepted);
}

#[test]
fn memory_ceiling_faults_instead_of_allocating() {
    let p = program("SET r1, 2^1000\nMUL r2, r1, r1\nHALT");
    let out = vm::run(&p, Value::zero(), &none(), &Limits::default().with_mem_bits(1500));
    assert_eq!(out.status, Status::Fault(FaultCode::MemoryCeiling));
    let p = program("SHL r2, 1, 2^40\nHALT");
    let out = vm::run(&p, Value::zero(), &none(), &Limits::default());
    assert_eq!(out.status, Status::Fault(FaultCode::MemoryCeiling));
}

#[test]
fn pow2_draws_grow_with_scale() {
    let sources = [
        "ALN r1\nALN r2\nMUL r3, r1, r2\nALN r4\nHALT",
        "ADD r1, r0, 1\nALN r2\nHALT",
        "ALN r1\nMUL r1, r1, r1\nALN r2\nHALT",
    ];
    for src in sources {
        let p = program(src);
        let mut previous: Option<Vec<u64>> = None;
        for &scale in EscalationSchedule::default().scales() {
            let out = vm::run(&p, Value::from(1000u64), &OracleFamily::pow2(scale), &Limits::default());
            let bits: Vec<u64> = out.aln_draws.iter().map(Value::bits).collect();
            if let Some(prev) = &previous {
                assert!(prev.iter().zip(&bits).all(|(a, b)| a < b), "{src}: {prev:?} then {bits:?}");
            }
            previous = Some(bits);
        }
    }
}

#[test]
fn pow2_draws_outgrow_everything_seen() {
    let p = program("SET r1, 2^300\nALN r2\nALN r3\nHALT");
    let out = vm::run(&p, Value::zero(), &OracleFamily::pow2(2), &Limits::default());
    let bits: Vec<u64> = out.aln_draws.iter().map(Value::bits).collect();
    assert!(bits[0] > 2 * 301);
    assert!(bits[1] > 2 * bits[0]);
}

#[test]
fn tower_is_straight_line_under_any_increasing_draws() {
    for x in 1..=3 {
        let (p, layout) = progs::gen_tower(x).unwrap();
        for scale in 1..=4 {
            let out = vm::run(&p, Value::zero(), &OracleFamily::pow2(scale), &Limits::default());
            assert_eq!(out.status, Status::Halted);
            assert_eq!(out.steps as usize, layout.instruction_count);
        }
    }
}

#[test]
fn traces_are_deterministic_and_complete() {
    let (p, _) = progs::gen_general_tower(6).unwrap();
    let oracle = OracleFamily::plan(progs::general_sufficient_plan(6).unwrap().exponents);
    let limits = Limits::default().traced();
    let a = vm::run(&p, Value::zero(), &oracle, &limits);
    let b = vm::run(&p, Value::zero(), &oracle, &limits);
    assert_eq!(a, b);
    let trace = a.trace.unwrap();
    assert_eq!(trace.len() as u64, a.steps);
    let records: Vec<String> = trace.iter().map(|e| e.to_record()).collect();
    let again: Vec<String> = b.trace.unwrap().iter().map(|e| e.to_record()).collect();
    assert_eq!(records, again);
    assert!(records[0].contains("\"draw_index\":0"));
}

#[test]
fn acceptor_reading() {
    let p = parse(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/square_acceptor.asr")).unwrap())
        .unwrap();
    for n in 0..200u64 {
        let square = (0..=n).any(|a| a * a == n);
        assert_eq!(vm::run_acceptor(&p, Value::from(n), &none(), &Limits::default()), square, "{n}");
    }
    let looping = program("x: JMP x");
    assert!(!vm::run_acceptor(&looping, Value::zero(), &none(), &Limits::default().with_fuel(10)));
}
