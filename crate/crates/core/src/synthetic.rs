//! Seeded generator for a department-sized instance.
//!
//! Shape: 17 courses (8 lower-level, 4 pure, 5 applied), 22 faculty (13
//! full-time with a load of exactly 3 and 9 part-time with a load of 0 to
//! 2), 24 day-pattern slots and 57 sections. Slots that share a day and
//! overlap in clock time form conflict pairs. Preferences and penalties are
//! all ones. Lower-level courses are open to everyone, upper-level courses
//! only to full-time faculty of the matching discipline.
//!
//! `MTH201` always has 8 sections: 3 taught by distinct part-time faculty
//! and 5 by full-time faculty. All sections of one course sit in distinct
//! slots, so a cancellation `course@slot` names exactly one section.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Array3, Matrix};
use crate::instance::{ConflictPair, Course, FacultyMember, Instance, TimeSlot};
use crate::scenario::Scenario;

pub const COURSES: usize = 17;
pub const FACULTY: usize = 22;
pub const SLOTS: usize = 24;
pub const SECTIONS: usize = 57;

/// The course with the 3 part-time plus 5 full-time sections.
pub const HEAVY_COURSE: &str = "MTH201";

const FULL_TIME_LOAD: f64 = 3.0;
const PART_TIME_LOAD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    Lower,
    Pure,
    Applied,
}

/// (number, level, sections, part-time sections)
const COURSE_TABLE: [(u32, Level, usize, usize); COURSES] = [
    (101, Level::Lower, 6, 3),
    (105, Level::Lower, 5, 2),
    (112, Level::Lower, 5, 3),
    (161, Level::Lower, 6, 3),
    (162, Level::Lower, 4, 2),
    (201, Level::Lower, 8, 3),
    (202, Level::Lower, 3, 1),
    (221, Level::Lower, 3, 1),
    (311, Level::Pure, 2, 0),
    (341, Level::Pure, 2, 0),
    (411, Level::Pure, 1, 0),
    (441, Level::Pure, 2, 0),
    (321, Level::Applied, 2, 0),
    (351, Level::Applied, 2, 0),
    (361, Level::Applied, 2, 0),
    (451, Level::Applied, 2, 0),
    (471, Level::Applied, 2, 0),
];

const PURE_FULL_TIME: usize = 6;
const APPLIED_FULL_TIME: usize = 7;
const PART_TIME: usize = 9;

/// (days, start minute, end minute)
fn slot_table() -> Vec<(&'static str, u32, u32)> {
    let mut slots = Vec::new();
    for h in 8..16 {
        slots.push(("MWF", h * 60, h * 60 + 50));
    }
    for start in [480, 570, 660, 750, 840, 930] {
        slots.push(("TR", start, start + 75));
    }
    for start in [840, 930, 1020, 1110] {
        slots.push(("MW", start, start + 75));
    }
    for start in [1020, 1110] {
        slots.push(("TR", start, start + 75));
    }
    for day in ["M", "T", "W", "R"] {
        slots.push((day, 1080, 1245));
    }
    slots
}

fn clock(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

fn shares_day(a: &str, b: &str) -> bool {
    a.chars().any(|c| b.contains(c))
}

fn build_slots() -> (Vec<TimeSlot>, Vec<ConflictPair>) {
    let table = slot_table();
    let slots = table
        .iter()
        .map(|&(days, start, end)| {
            TimeSlot::new(
                format!("{days}{}", clock(start).replace(':', "")),
                format!("{days} {}-{}", clock(start), clock(end)),
            )
        })
        .collect();
    let mut conflicts = Vec::new();
    for a in 0..table.len() {
        for b in a + 1..table.len() {
            let (da, sa, ea) = table[a];
            let (db, sb, eb) = table[b];
            if shares_day(da, db) && sa < eb && sb < ea {
                conflicts.push(ConflictPair { slot_a: a, slot_b: b });
            }
        }
    }
    (slots, conflicts)
}

fn build_faculty() -> Vec<FacultyMember> {
    let mut faculty = Vec::with_capacity(FACULTY);
    for k in 0..PURE_FULL_TIME + APPLIED_FULL_TIME {
        let area = if k < PURE_FULL_TIME { "pure" } else { "applied" };
        faculty.push(FacultyMember::new(
            format!("FT{:02}", k + 1),
            format!("Full-time {:02} ({area})", k + 1),
            FULL_TIME_LOAD,
            FULL_TIME_LOAD,
        ));
    }
    for k in 0..PART_TIME {
        faculty.push(FacultyMember::new(
            format!("PT{:02}", k + 1),
            format!("Part-time {:02}", k + 1),
            0.0,
            PART_TIME_LOAD,
        ));
    }
    faculty
}

fn eligible(level: Level, faculty: usize) -> bool {
    match level {
        Level::Lower => true,
        Level::Pure => faculty < PURE_FULL_TIME,
        Level::Applied => (PURE_FULL_TIME..PURE_FULL_TIME + APPLIED_FULL_TIME).contains(&faculty),
    }
}

/// Course index of every section, grouped by teacher.
fn assign_teachers(rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let full_time = PURE_FULL_TIME + APPLIED_FULL_TIME;
    let heavy = COURSE_TABLE.iter().position(|c| c.0 == 201).expect("heavy course");
    let mut teaching = vec![Vec::new(); FACULTY];

    // The heavy course's part-time sections go to three different people.
    let mut part_time: Vec<usize> = Vec::new();
    for (i, &(_, _, _, pt)) in COURSE_TABLE.iter().enumerate() {
        if i != heavy {
            part_time.extend(std::iter::repeat_n(i, pt));
        }
    }
    part_time.shuffle(rng);
    for k in 0..COURSE_TABLE[heavy].3 {
        teaching[full_time + k].push(heavy);
    }
    let mut queue = part_time.into_iter();
    for list in teaching.iter_mut().skip(full_time) {
        while list.len() < PART_TIME_LOAD as usize {
            list.push(queue.next().expect("part-time sections fill all part-time loads"));
        }
    }

    let mut fill = |level: Level, members: std::ops::Range<usize>, rng: &mut ChaCha8Rng| {
        let mut sections: Vec<usize> = COURSE_TABLE
            .iter()
            .enumerate()
            .filter(|(_, c)| c.1 == level)
            .flat_map(|(i, c)| std::iter::repeat_n(i, c.2))
            .collect();
        sections.shuffle(rng);
        for (k, i) in sections.into_iter().enumerate() {
            teaching[members.start + k % members.len()].push(i);
        }
    };
    fill(Level::Pure, 0..PURE_FULL_TIME, rng);
    fill(Level::Applied, PURE_FULL_TIME..full_time, rng);

    let mut lower: Vec<usize> = COURSE_TABLE
        .iter()
        .enumerate()
        .filter(|(_, c)| c.1 == Level::Lower)
        .flat_map(|(i, c)| std::iter::repeat_n(i, c.2 - c.3))
        .collect();
    lower.shuffle(rng);
    let mut lower = lower.into_iter();
    for list in teaching.iter_mut().take(full_time) {
        while list.len() < FULL_TIME_LOAD as usize {
            list.push(lower.next().expect("lower-level sections fill all full-time loads"));
        }
    }
    debug_assert!(lower.next().is_none());
    teaching
}

/// Places every section so that no teacher has two sections in one slot or
/// in a conflicting pair and no course has two sections in one slot.
fn place_sections(
    rng: &mut ChaCha8Rng,
    teaching: &[Vec<usize>],
    conflicts: &[ConflictPair],
) -> Vec<(usize, usize, usize)> {
    let clash = |a: usize, b: usize| a == b || ConflictPair::new(a, b).is_some_and(|p| conflicts.contains(&p));
    let mut order: Vec<(usize, usize)> = teaching
        .iter()
        .enumerate()
        .flat_map(|(j, list)| list.iter().map(move |&i| (i, j)))
        .collect();
    loop {
        order.shuffle(rng);
        let mut placed: Vec<(usize, usize, usize)> = Vec::with_capacity(order.len());
        let mut ok = true;
        for &(i, j) in &order {
            let options: Vec<usize> = (0..SLOTS)
                .filter(|&t| {
                    placed
                        .iter()
                        .all(|&(pi, pj, pt)| !(pj == j && clash(pt, t)) && !(pi == i && pt == t))
                })
                .collect();
            if options.is_empty() {
                ok = false;
                break;
            }
            placed.push((i, j, options[rng.gen_range(0..options.len())]));
        }
        if ok {
            placed.sort_unstable();
            return placed;
        }
    }
}

/// A seeded department-sized instance whose demand equals its obsolete
/// schedule.
pub fn department_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let courses: Vec<Course> = COURSE_TABLE
        .iter()
        .map(|&(n, _, _, _)| Course::new(format!("MTH{n}"), format!("MTH {n}"), 1.0))
        .collect();
    let faculty = build_faculty();
    let (slots, conflicts) = build_slots();
    let teaching = assign_teachers(&mut rng);
    let placement = place_sections(&mut rng, &teaching, &conflicts);

    let mut x = Array3::filled(COURSES, FACULTY, SLOTS, false);
    for &(i, j, t) in &placement {
        x.set(i, j, t, true);
    }
    let mut instance = Instance {
        eligibility: Matrix::from_fn(COURSES, FACULTY, |i, j| eligible(COURSE_TABLE[i].1, j)),
        courses,
        faculty,
        slots,
        conflicts,
        obsolete_schedule: x,
        preferences: Matrix::filled(FACULTY, SLOTS, 1.0),
        swap_penalties: Matrix::filled(COURSES, FACULTY, 1.0),
        demand: Matrix::filled(COURSES, SLOTS, 0),
    };
    instance.demand = instance.baseline_demand();
    instance
}

fn is_part_time(instance: &Instance, j: usize) -> bool {
    let f = &instance.faculty[j];
    f.load_min < f.load_max
}

fn cancel_one(instance: &Instance, name: &str, i: usize, t: usize) -> Scenario {
    Scenario::new(name).cancel(&instance.courses[i].id, &instance.slots[t].id, 1)
}

/// True when faculty `j` could also teach at slot `t` after dropping its
/// section at `dropped`.
fn free_for(instance: &Instance, j: usize, t: usize, dropped: Option<usize>) -> bool {
    if *instance.preferences.get(j, t) <= 0.0 {
        return false;
    }
    instance
        .assignments()
        .into_iter()
        .filter(|&(_, aj, at)| aj == j && Some(at) != dropped)
        .all(|(_, _, at)| at != t && !instance.conflicts_with(at, t))
}

/// Cancels the first part-time section.
pub fn simulation_one(instance: &Instance) -> Option<Scenario> {
    let (i, _, t) = instance
        .assignments()
        .into_iter()
        .find(|&(_, j, _)| is_part_time(instance, j))?;
    Some(cancel_one(instance, "cancel one part-time section", i, t))
}

/// Cancels the first full-time section whose teacher can absorb a
/// part-time section of the same course, so the lost load can be replaced
/// without a course swap penalty for the full-time member.
pub fn simulation_two(instance: &Instance) -> Option<Scenario> {
    let assignments = instance.assignments();
    assignments
        .iter()
        .filter(|&&(_, j, _)| !is_part_time(instance, j))
        .find(|&&(i, j, t)| {
            assignments.iter().any(|&(oi, oj, ot)| {
                oi == i && is_part_time(instance, oj) && free_for(instance, j, ot, Some(t))
            })
        })
        .map(|&(i, _, t)| cancel_one(instance, "cancel one full-time section", i, t))
}

/// Cancels every part-time section of `course` plus its first full-time
/// section. `None` unless the course has exactly three part-time sections
/// and at least one full-time section.
pub fn simulation_three(instance: &Instance, course: &str) -> Option<Scenario> {
    let ci = instance.course_index(course)?;
    let sections: Vec<(usize, usize)> = instance
        .assignments()
        .into_iter()
        .filter(|&(i, _, _)| i == ci)
        .map(|(_, j, t)| (j, t))
        .collect();
    let part: Vec<usize> = sections
        .iter()
        .filter(|&&(j, _)| is_part_time(instance, j))
        .map(|&(_, t)| t)
        .collect();
    let full = sections.iter().find(|&&(j, _)| !is_part_time(instance, j))?.1;
    if part.len() != 3 {
        return None;
    }
    let mut scenario = Scenario::new(format!("cancel four sections of {course}"));
    for t in part.into_iter().chain([full]) {
        scenario = scenario.cancel(course, &instance.slots[t].id, 1);
    }
    Some(scenario)
}

/// A random instance with at most `max_cells` schedule cells, small enough
/// for [`crate::solver::brute_force`]. Weights come from short lists of
/// binary-exact values, so scaled objectives stay exact.
pub fn random_instance(seed: u64, max_cells: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_cells = max_cells.max(1);
    let (courses, faculty, slots) = loop {
        let d = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=5));
        if d.0 * d.1 * d.2 <= max_cells {
            break d;
        }
    };
    let pick = |rng: &mut ChaCha8Rng, values: &[f64]| values[rng.gen_range(0..values.len())];

    let preferences = Matrix::from_fn(faculty, slots, |_, _| pick(&mut rng, &[0.0, 0.5, 1.0, 1.0, 2.0, 3.0]));
    let swap_penalties = Matrix::from_fn(courses, faculty, |_, _| pick(&mut rng, &[0.0, 0.5, 1.0, 1.0, 2.0]));
    let eligibility = Matrix::from_fn(courses, faculty, |_, _| rng.gen_bool(0.8));
    let course_list: Vec<Course> = (0..courses)
        .map(|i| Course::new(format!("C{i}"), format!("Course {i}"), pick(&mut rng, &[1.0, 1.0, 2.0, 0.5])))
        .collect();

    let mut x = Array3::filled(courses, faculty, slots, false);
    for j in 0..faculty {
        for t in 0..slots {
            if *preferences.get(j, t) > 0.0 && rng.gen_bool(0.4) {
                let i = rng.gen_range(0..courses);
                if *eligibility.get(i, j) {
                    x.set(i, j, t, true);
                }
            }
        }
    }

    let mut conflicts = Vec::new();
    for a in 0..slots {
        for b in a + 1..slots {
            if rng.gen_bool(0.2) {
                conflicts.push(ConflictPair { slot_a: a, slot_b: b });
            }
        }
    }

    let faculty_list = (0..faculty)
        .map(|j| {
            let load: f64 = (0..courses)
                .map(|i| {
                    let taught = (0..slots).filter(|&t| *x.get(i, j, t)).count();
                    course_list[i].load_units * taught as f64
                })
                .sum();
            let load_min = (load - pick(&mut rng, &[0.0, 0.0, 1.0, 2.0])).max(0.0);
            let load_max = load + pick(&mut rng, &[0.0, 0.0, 1.0, 2.0]);
            FacultyMember::new(format!("F{j}"), format!("Faculty {j}"), load_min, load_max)
        })
        .collect();

    let mut instance = Instance {
        courses: course_list,
        faculty: faculty_list,
        slots: (0..slots).map(|t| TimeSlot::new(format!("S{t}"), format!("Slot {t}"))).collect(),
        conflicts,
        obsolete_schedule: x,
        preferences,
        swap_penalties,
        demand: Matrix::filled(courses, slots, 0),
        eligibility,
    };
    let baseline = instance.baseline_demand();
    instance.demand = baseline.map(|&m| {
        let delta: i64 = pick(&mut rng, &[-1.0, 0.0, 0.0, 0.0, 1.0]) as i64;
        (i64::from(m) + delta).max(0) as u32
    });
    instance
}
