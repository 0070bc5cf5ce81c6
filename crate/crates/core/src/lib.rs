pub mod backend;
pub mod bench;
pub mod domains;
pub mod hierarchy;
pub mod ltl;
pub mod problem;
pub mod sexpr;
pub mod task_planner;
pub mod validate;
