use hyplan::ground::GroundedProblem;
use hyplan::state::Precision;

pub const MOVER: &str = "
(define (domain mover)
  (:requirements :fluents :time :negative-preconditions)
  (:predicates (on) (flag) (other))
  (:functions (x) (v) (y))
  (:action switch
    :parameters ()
    :precondition (not (on))
    :effect (on))
  (:process move
    :parameters ()
    :precondition (on)
    :effect (increase (x) (* #t (v))))
  (:process follow
    :parameters ()
    :precondition (on)
    :effect (increase (y) (* #t (x))))
  (:event reach
    :parameters ()
    :precondition (and (>= (x) 1) (not (flag)))
    :effect (flag))
  (:event also
    :parameters ()
    :precondition (and (>= (x) 1) (not (other)))
    :effect (other)))";

pub fn mover(init: &str, dt: f64, precision: Precision) -> GroundedProblem {
    let p = format!("(define (problem p) (:domain mover) (:init {init}) (:goal (flag)))");
    super::ground_opts(MOVER, &p, &super::options(dt, precision, None))
}

pub const TANK: &str = "
(define (domain tank)
  (:requirements :fluents :time :negative-preconditions :semantic-attachment)
  (:predicates (pumping) (full))
  (:functions (flow) (pump_speed) (level) (capacity) (spare))
  (:action start
    :parameters ()
    :precondition (not (pumping))
    :effect (pumping))
  (:process fill
    :parameters ()
    :precondition (pumping)
    :effect (increase (level) (* #t (flow))))
  (:event overflow
    :parameters ()
    :precondition (and (>= (level) (capacity)) (not (full)))
    :effect (full)))";

pub fn tank(domain: &str) -> GroundedProblem {
    let p = "(define (problem p) (:domain tank)
      (:init (pumping) (= (flow) 0) (= (pump_speed) 4) (= (level) 0) (= (capacity) 2) (= (spare) 7))
      (:goal (full)))";
    super::ground(domain, p)
}

pub const TRIG_DOMAIN: &str = "
(define (domain trig)
  (:requirements :fluents)
  (:functions (theta) (sin_theta) (cos_theta))
  (:action compute
    :parameters ()
    :precondition (>= (theta) 0)
    :effect (and
      (assign (sin_theta) (/ (* (* 4 (theta)) (- 180 (theta))) (- 40500 (* (theta) (- 180 (theta))))))
      (assign (cos_theta) (/ (- 32400 (* 4 (* (theta) (theta)))) (+ 32400 (* (theta) (theta))))))))";

pub fn trig_problem(theta: f64) -> String {
    format!("(define (problem t) (:domain trig) (:init (= (theta) {theta}) (= (sin_theta) 0) (= (cos_theta) 0)) (:goal (>= (theta) 0)))")
}

pub const ABS_DOMAIN: &str = "
(define (domain magnitude)
  (:requirements :fluents)
  (:functions (z) (x_abs) (x1) (x2) (y1) (y2) (v_mag))
  (:action measure
    :parameters ()
    :precondition (>= (x_abs) 0)
    :effect (and
      (assign x_abs (^ (^ (z) 2) 0.5))
      (assign v_mag (^ (+ (^ (-(x2)(x1)) 2) (^ (-(y2)(y1)) 2)) 0.5)))))";

pub const ABS_OP_DOMAIN: &str = "
(define (domain drift)
  (:requirements :fluents :time)
  (:predicates (drifting))
  (:functions (pos))
  (:action start
    :parameters ()
    :precondition (not (drifting))
    :effect (drifting))
  (:process drift
    :parameters ()
    :precondition (drifting)
    :effect (decrease (pos) (* #t 1))))";

pub const COUNTER: &str = "
(define (domain counter)
  (:requirements :fluents :time)
  (:functions (n) (fuel_remaining) (total_reward))
  (:action bump
    :parameters ()
    :precondition (>= (n) 0)
    :effect (increase (n) 1)))";

pub fn counter(metric: &str) -> GroundedProblem {
    let p = format!(
        "(define (problem p) (:domain counter)
           (:init (= (n) 0) (= (fuel_remaining) 2) (= (total_reward) 5))
           (:goal (>= (n) 4)) {metric})"
    );
    super::ground(COUNTER, &p)
}
