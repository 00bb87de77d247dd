//! Seeded synthetic corpus standing in for the private monitoring dataset.
//!
//! Profiles follow the published bullying-history split (half with no prior
//! bullying, the rest split evenly over the three recency tiers, allocated
//! exactly and then shuffled). Each user receives 50..=120 messages spread
//! over the 120 days before [`SYNTHETIC_NOW`]; messages are drawn from a
//! benign pool and two abusive pools, with the abuse rate rising with the
//! user's vulnerability factor.

use std::collections::HashSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    BullyingHistory, Ethnicity, Gender, InternetUse, Message, Race, UserProfile, UserRecord,
};
use crate::vulnerability::{vf, VulnerabilityWeights};
use crate::{Error, Result};

/// Reference "now" of every synthetic corpus (2024-06-30T00:00:00Z).
pub const SYNTHETIC_NOW: i64 = 1_719_705_600;

const MIN_MESSAGES: usize = 50;
const MAX_MESSAGES: usize = 120;
const SPAN_DAYS: i64 = 120;

const BENIGN: &[&str] = &[
    "had a great time at the {place} today",
    "can't wait for the {activity} this weekend",
    "{name} you looked so happy in that picture",
    "happy birthday {name} hope your day is amazing",
    "the {food} at the {place} was really good",
    "nowplaying {song} on repeat all day",
    "good luck on your {subject} test tomorrow",
    "thanks for helping me with the {subject} homework",
    "see you at {activity} practice later",
    "this {thing} is so cool where did you get it",
    "lol that video of the {animal} is hilarious",
    "we should go to the {place} again soon",
    "miss you {name} call me when you get home",
    "i love this song so much",
    "looking for a car with a/c this summer",
    "you did awesome at the {activity} game",
    "my {thing} broke again ugh",
    "so tired after {subject} class today",
    "who is going to the {place} on friday",
    "that {food} looks delicious",
    "congrats on making the {activity} team {name}",
    "your {thing} is really pretty",
    "trackering app is real you can't play with people live anymore",
    "just finished my {subject} project finally",
    "the weather is nice let's go to the {place}",
];

const MILD: &[&str] = &[
    "you are such a {insult}",
    "nobody likes you {insult}",
    "why are you so {neg_adj}",
    "lol what a {insult}",
    "go away {insult} nobody cares",
    "you look like a {insult} in that picture",
    "{name} is a {neg_adj} {insult}",
    "stop posting {insult} you're so {neg_adj}",
    "you're so {neg_adj} it's embarrassing",
    "this {insult} looks like a wannabe",
    "i know you're probably some {insult}",
    "too {neg_adj} need to eat",
];

const SEVERE: &[&str] = &[
    "{profanity} you {insult} i will beat your {seed}",
    "kill yourself you worthless {insult}",
    "you {profanity} {insult} everyone hates you",
    "i hope you die {insult}",
    "{profanity} off you {neg_adj} {seed}",
    "shut the {profanity} up you {insult} {seed}",
    "you're a {profanity} {seed} and a {insult}",
    "go die you {neg_adj} {seed} {insult}",
    "ugly {insult} {seed} nobody wants you here {profanity}",
    "get ya {seed} beat {insult} {profanity} you",
];

const NAMES: &[&str] = &["sam", "alex", "mino", "jordan", "taylor", "casey", "riley", "jamie"];
const PLACES: &[&str] = &["beach", "mall", "park", "library", "cinema", "lake", "gym"];
const ACTIVITIES: &[&str] = &["soccer", "concert", "basketball", "dance", "chess", "swim"];
const FOODS: &[&str] = &["pizza", "burritos", "tacos", "pancakes", "ramen", "cake"];
const SONGS: &[&str] = &["mylo", "sound machine", "summer hits", "lofi beats"];
const SUBJECTS: &[&str] = &["math", "history", "biology", "chemistry", "art"];
const THINGS: &[&str] = &["phone", "jacket", "bike", "headphones", "costume", "laptop"];
const ANIMALS: &[&str] = &["cat", "puppy", "parrot", "hamster"];
const INSULTS: &[&str] = &["bitch", "loser", "freak", "idiot", "dumbass", "slut", "pussy"];
const NEG_ADJ: &[&str] = &["ugly", "fat", "stupid", "pathetic", "skinny", "disgusting", "worthless"];
const PROFANITY: &[&str] = &["fuck", "fucking", "bullshit", "fubar"];
const SEEDS: &[&str] = &["ass", "fuckwit", "chode", "floozy", "ahole", "butt", "buttfucker", "fuckwhit"];

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

fn fill(template: &str, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = open + rest[open..].find('}').expect("unterminated slot");
        let slot = &rest[open + 1..close];
        let pool = match slot {
            "name" => NAMES,
            "place" => PLACES,
            "activity" => ACTIVITIES,
            "food" => FOODS,
            "song" => SONGS,
            "subject" => SUBJECTS,
            "thing" => THINGS,
            "animal" => ANIMALS,
            "insult" => INSULTS,
            "neg_adj" => NEG_ADJ,
            "profanity" => PROFANITY,
            "seed" => SEEDS,
            other => panic!("unknown template slot {other}"),
        };
        out.push_str(pick(rng, pool));
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    out
}

/// Random surface variation: shouting, exclamation runs and elongation.
fn decorate(text: String, rng: &mut ChaCha8Rng) -> String {
    let mut text = text;
    if rng.gen_bool(0.12) {
        text = text.to_uppercase();
    }
    if rng.gen_bool(0.2) {
        let marks = rng.gen_range(1..=4);
        text.push_str(&"!".repeat(marks));
    }
    if rng.gen_bool(0.08) {
        text = text.replacen("so ", "soooo ", 1);
    }
    text
}

fn history_allocation(n_users: usize) -> Vec<BullyingHistory> {
    let n_none = (n_users as f64 / 2.0).round() as usize;
    let tiers = [
        BullyingHistory::Within1Month,
        BullyingHistory::OneToTwoMonths,
        BullyingHistory::MoreThanTwoMonths,
    ];
    (0..n_users)
        .map(|i| {
            if i < n_none {
                BullyingHistory::None
            } else {
                tiers[(i - n_none) % 3]
            }
        })
        .collect()
}

fn random_profile(i: usize, history: BullyingHistory, rng: &mut ChaCha8Rng) -> UserProfile {
    let gender_roll: f64 = rng.gen();
    UserProfile {
        user_id: format!("user{i:04}"),
        age: rng.gen_range(10..=19),
        gender: if gender_roll < 0.5 {
            Gender::Female
        } else if gender_roll < 0.95 {
            Gender::Male
        } else {
            Gender::Other
        },
        race: if rng.gen_bool(0.4) { Race::Nonwhite } else { Race::White },
        ethnicity: if rng.gen_bool(0.2) {
            Ethnicity::HispanicLatino
        } else {
            Ethnicity::Other
        },
        depression: rng.gen_bool(0.25),
        anxiety: rng.gen_bool(0.3),
        self_esteem_issues: rng.gen_bool(0.3),
        bullying_history: history,
        disciplinary_issues: rng.gen_bool(0.2),
        substance_abuse: rng.gen_bool(0.1),
        internet_use: InternetUse::ALL[rng.gen_range(0..InternetUse::ALL.len())],
    }
}

/// Template pool a synthetic message was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplatePool {
    Benign,
    Mild,
    Severe,
}

impl TemplatePool {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Generates `n_users` deterministic synthetic records from `seed`.
pub fn generate_synthetic(n_users: usize, seed: u64) -> Result<Vec<UserRecord>> {
    Ok(generate_synthetic_with_pools(n_users, seed)?.0)
}

/// As [`generate_synthetic`], also returning the template pool of every
/// message (parallel to each record's `messages`).
pub fn generate_synthetic_with_pools(
    n_users: usize,
    seed: u64,
) -> Result<(Vec<UserRecord>, Vec<Vec<TemplatePool>>)> {
    if n_users < 1 {
        return Err(Error::InvalidInput("n_users must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut histories = history_allocation(n_users);
    histories.shuffle(&mut rng);

    let weights = VulnerabilityWeights::default();
    let now: DateTime<Utc> = Utc.timestamp_opt(SYNTHETIC_NOW, 0).unwrap();
    let span_secs = SPAN_DAYS * 24 * 3600;

    let mut records = Vec::with_capacity(n_users);
    let mut pools = Vec::with_capacity(n_users);
    for (i, history) in histories.into_iter().enumerate() {
        let profile = random_profile(i, history, &mut rng);
        let vulnerability = vf(&profile, &weights)?;
        let abuse_rate = 0.1 + 0.6 * vulnerability;
        let severe_share = 0.25 + 0.5 * vulnerability;

        let n_messages = rng.gen_range(MIN_MESSAGES..=MAX_MESSAGES);
        let mut offsets: Vec<i64> = Vec::with_capacity(n_messages);
        let mut used = HashSet::new();
        while offsets.len() < n_messages {
            let off = rng.gen_range(0..span_secs);
            if used.insert(off) {
                offsets.push(off);
            }
        }
        offsets.sort_unstable_by(|a, b| b.cmp(a));

        let mut messages = Vec::with_capacity(n_messages);
        let mut user_pools = Vec::with_capacity(n_messages);
        for off in offsets {
            let kind = if rng.gen_bool(abuse_rate) {
                if rng.gen_bool(severe_share) {
                    TemplatePool::Severe
                } else {
                    TemplatePool::Mild
                }
            } else {
                TemplatePool::Benign
            };
            let templates = match kind {
                TemplatePool::Benign => BENIGN,
                TemplatePool::Mild => MILD,
                TemplatePool::Severe => SEVERE,
            };
            let text = decorate(fill(pick(&mut rng, templates), &mut rng), &mut rng);
            messages.push(Message {
                sender_id: rng.gen_range(1..=200u32).to_string(),
                timestamp: now - Duration::seconds(off),
                text,
            });
            user_pools.push(kind);
        }
        records.push(UserRecord { profile, messages });
        pools.push(user_pools);
    }
    Ok((records, pools))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_distribution_for_400_users() {
        let records = generate_synthetic(400, 7).unwrap();
        assert_eq!(records.len(), 400);
        let none = records
            .iter()
            .filter(|r| r.profile.bullying_history == BullyingHistory::None)
            .count();
        assert!((190..=210).contains(&none), "none count {none}");
        for tier in &BullyingHistory::ALL[1..] {
            let c = records.iter().filter(|r| r.profile.bullying_history == *tier).count();
            assert!((66..=67).contains(&c), "{tier:?}: {c}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = generate_synthetic(5, 3).unwrap();
        let b = generate_synthetic(5, 3).unwrap();
        let c = generate_synthetic(5, 4).unwrap();
        assert_eq!(
            super::super::to_json_lines(&a).unwrap(),
            super::super::to_json_lines(&b).unwrap()
        );
        assert_ne!(a, c);
    }

    #[test]
    fn single_user_has_messages() {
        let r = generate_synthetic(1, 0).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].messages.len() >= MIN_MESSAGES);
        assert!(generate_synthetic(0, 0).is_err());
    }

    #[test]
    fn messages_sorted_and_unique() {
        for r in generate_synthetic(10, 9).unwrap() {
            assert!(r.messages.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
            assert!((MIN_MESSAGES..=MAX_MESSAGES).contains(&r.messages.len()));
        }
    }
}
