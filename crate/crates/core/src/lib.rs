pub mod agent_sim;
pub mod collector;
pub mod config;
pub mod daemon;
pub mod grapher;
pub mod http;
pub mod rrd;
pub mod snmp;
pub mod status;
pub mod xml;
