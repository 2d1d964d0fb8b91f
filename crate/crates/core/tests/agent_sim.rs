mod common;

use std::collections::HashSet;
use std::net::UdpSocket;
use std::sync::atomic::Ordering;
use std::time::{Duration, Instant};

use clustermon::agent_sim::{
    answer, spawn_farm, table1_template, Agent, AgentScript, Evaluator, Fault, Faults,
    FragmentOptions, Generator, SimError, SimVar,
};
use clustermon::collector::{poll_host, CollectorOptions, Outcome, SystemClock, VarOutcome};
use clustermon::config::parse_config;
use clustermon::rrd::VarKind;
use clustermon::snmp::{
    decode_message, encode_get_request, ErrorStatus, SnmpMessage, Value, Version,
};

use common::counter_oracle;

#[test]
fn a_farm_of_64_answers_every_variable() {
    let farm = spawn_farm(64, &table1_template("public"), 11).unwrap();
    let ports: HashSet<u16> = farm.agents.iter().map(Agent::port).collect();
    assert_eq!(ports.len(), 64);
    let cfg = parse_config(&farm.config_document(&FragmentOptions::default(), &[])).unwrap();
    assert_eq!(cfg.hosts.len(), 64);
    let mut socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let opts = CollectorOptions {
        timeout: 2.0,
        retries: 1,
    };
    for h in &cfg.hosts {
        let r = poll_host(h, &opts, &mut socket, &SystemClock::new()).unwrap();
        assert_eq!(r.outcome, Outcome::Responded, "{}", h.name);
        assert!(r.values.iter().all(|(_, o)| matches!(o, VarOutcome::Ok(_))));
    }
}

#[test]
fn generated_config_matches_the_farm() {
    let farm = spawn_farm(3, &table1_template("pub-lic_2"), 1).unwrap();
    let opts = FragmentOptions {
        version: Version::V1,
        polldelay: 10,
        ..FragmentOptions::default()
    };
    let cfg =
        parse_config(&farm.config_document(&opts, &[("pmc-num-connections", "7".into())])).unwrap();
    assert_eq!(cfg.num_connections, 7);
    for (h, a) in cfg.hosts.iter().zip(&farm.agents) {
        assert_eq!(h.ip, a.local_addr().to_string());
        assert_eq!(h.polldelay, 10);
        assert_eq!(h.snmp_version, Version::V1);
        assert_eq!(h.mibs.len(), 25);
        assert!(h.mibs.iter().all(|m| m.community == "pub-lic_2"));
        assert_eq!(
            h.mibs.iter().filter(|m| m.kind == VarKind::Counter).count(),
            6
        );
    }
    assert_eq!(cfg.hosts[2].name, "node0002");
}

#[test]
fn table1_datagrams_are_paper_sized() {
    let script = table1_template("public");
    let eval = Evaluator::new(&script.variables, 5);
    let oids: Vec<_> = script.variables.iter().map(|v| v.oid.clone()).collect();
    let req_bytes = encode_get_request(Version::V2c, b"public", 123_456, &oids).unwrap();
    let req = decode_message(&req_bytes).unwrap();
    let resp = answer(&req, b"public", &eval, &Faults::default(), 1000.0).unwrap();
    let resp_bytes = resp.encode().unwrap();
    assert!(
        (600..=1000).contains(&req_bytes.len()),
        "request {} B",
        req_bytes.len()
    );
    assert!(
        (700..=1400).contains(&resp_bytes.len()),
        "response {} B",
        resp_bytes.len()
    );
}

#[test]
fn evaluation_is_deterministic_per_seed() {
    let script = table1_template("public");
    let a = Evaluator::new(&script.variables, 42);
    let b = Evaluator::new(&script.variables, 42);
    let c = Evaluator::new(&script.variables, 43);
    let mut differs = false;
    for i in 0..a.len() {
        for t in [0.0, 17.5, 3600.0, 1e6] {
            assert_eq!(a.value(i, t), b.value(i, t));
            differs |= a.value(i, t) != c.value(i, t);
        }
    }
    assert!(differs);
}

#[test]
fn counters_advance_at_their_rate_modulo_width() {
    let vars = vec![
        SimVar::new(
            "c32",
            clustermon::snmp::parse_oid("ifInOctets.1").unwrap(),
            Generator::Counter {
                rate: 3.0e7,
                width: 32,
            },
        ),
        SimVar::new(
            "c64",
            clustermon::snmp::parse_oid("ifOutOctets.1").unwrap(),
            Generator::Counter {
                rate: 1.0e9,
                width: 64,
            },
        ),
    ];
    for seed in 0..50 {
        let e = Evaluator::new(&vars, seed);
        for k in 0..20 {
            let (t0, t1) = (30.0 * k as f64, 30.0 * (k + 1) as f64);
            let Value::Counter32(a) = e.value(0, t0) else {
                panic!()
            };
            let Value::Counter32(b) = e.value(0, t1) else {
                panic!()
            };
            assert_eq!(counter_oracle(a as u64, b as u64), 900_000_000);
            let Value::Counter64(a) = e.value(1, t0) else {
                panic!()
            };
            let Value::Counter64(b) = e.value(1, t1) else {
                panic!()
            };
            assert_eq!(counter_oracle(a, b), 30_000_000_000);
        }
    }
}

fn request(version: Version, community: &[u8], script: &AgentScript) -> SnmpMessage {
    SnmpMessage::get_request(
        version,
        community,
        9,
        script.variables.iter().map(|v| v.oid.clone()),
    )
}

#[test]
fn faults_shape_the_answers() {
    let script = table1_template("public");
    let eval = Evaluator::new(&script.variables, 1);
    let mut faults = Faults::default();
    faults.error_oids.insert(script.variables[4].oid.clone());

    let v1 = answer(
        &request(Version::V1, b"public", &script),
        b"public",
        &eval,
        &faults,
        0.0,
    )
    .unwrap();
    assert_eq!(
        (v1.error_status, v1.error_index),
        (ErrorStatus::NoSuchName, 5)
    );
    assert!(v1.varbinds.iter().all(|vb| vb.value == Value::Null));

    let v2 = answer(
        &request(Version::V2c, b"public", &script),
        b"public",
        &eval,
        &faults,
        0.0,
    )
    .unwrap();
    assert_eq!(v2.error_status, ErrorStatus::NoError);
    assert_eq!(v2.varbinds[4].value, Value::NoSuchObject);
    assert!(v2.varbinds[3].value.as_unsigned().is_some());

    assert!(answer(
        &request(Version::V2c, b"private", &script),
        b"public",
        &eval,
        &faults,
        0.0
    )
    .is_none());
}

fn exchange(socket: &UdpSocket, agent: &Agent, bytes: &[u8]) -> Option<SnmpMessage> {
    socket.send_to(bytes, agent.local_addr()).unwrap();
    let mut buf = [0u8; 4096];
    socket
        .recv_from(&mut buf)
        .ok()
        .map(|(n, _)| decode_message(&buf[..n]).unwrap())
}

#[test]
fn live_fault_injection() {
    let script = table1_template("public");
    let agent = Agent::start(&script, 3).unwrap();
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    socket
        .set_read_timeout(Some(Duration::from_millis(300)))
        .unwrap();
    let req = request(Version::V2c, b"public", &script).encode().unwrap();

    assert!(exchange(&socket, &agent, &req).is_some());
    agent.inject_fault(Fault::Silent(true));
    assert!(exchange(&socket, &agent, &req).is_none());
    agent.inject_fault(Fault::Clear);
    agent.inject_fault(Fault::ErrorOid(script.variables[0].oid.clone()));
    let r = exchange(&socket, &agent, &req).unwrap();
    assert_eq!(r.varbinds[0].value, Value::NoSuchObject);
    agent.inject_fault(Fault::Clear);
    assert_eq!(agent.faults(), Faults::default());

    let wrong = request(Version::V2c, b"nope", &script).encode().unwrap();
    assert!(exchange(&socket, &agent, &wrong).is_none());
    assert!(exchange(&socket, &agent, b"\x30\x00junk").is_none());
    let s = agent.stats();
    assert_eq!(s.requests.load(Ordering::Relaxed), 5);
    assert_eq!(s.responses.load(Ordering::Relaxed), 2);
    assert_eq!(s.dropped.load(Ordering::Relaxed), 3);
}

#[test]
fn drop_probability_is_binomial() {
    let script = table1_template("public");
    let agent = Agent::start(&script, 77).unwrap();
    agent.inject_fault(Fault::DropProbability(0.3));
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let req = request(Version::V2c, b"public", &script).encode().unwrap();
    let n = 2000u64;
    for _ in 0..n {
        socket.send_to(&req, agent.local_addr()).unwrap();
        // keep the agent's receive buffer from overflowing
        std::thread::sleep(Duration::from_micros(200));
    }
    let deadline = Instant::now() + Duration::from_secs(10);
    while agent.stats().requests.load(Ordering::Relaxed) < n && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(10));
    }
    assert_eq!(agent.stats().requests.load(Ordering::Relaxed), n);
    let dropped = agent.stats().dropped.load(Ordering::Relaxed) as f64;
    let (mean, sd) = (n as f64 * 0.3, (n as f64 * 0.3 * 0.7).sqrt());
    assert!(
        (dropped - mean).abs() < 5.0 * sd,
        "{dropped} dropped of {n}"
    );
}

#[test]
fn invalid_scripts_are_rejected() {
    let mut s = table1_template("public");
    s.faults.drop_probability = 1.5;
    assert!(matches!(
        Agent::start(&s, 0),
        Err(SimError::BadProbability(_))
    ));
    let mut s = table1_template("public");
    s.variables[10].generator = Generator::Counter {
        rate: 1.0,
        width: 16,
    };
    assert!(matches!(s.validate(), Err(SimError::BadWidth(16))));
    assert!(matches!(
        spawn_farm(0, &table1_template("public"), 0),
        Err(SimError::EmptyFarm)
    ));
}
