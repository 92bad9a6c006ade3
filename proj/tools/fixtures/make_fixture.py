#!/usr/bin/env python3
"""Regenerates fixtures/sandy25: a synthetic 25-user corpus with a scripted
mock transcript. The panicsim binary is run once to learn the train/test
partition so the script can give each test user a distinct role."""

import argparse
import csv
import json
import random
import subprocess
import tempfile
from datetime import datetime, timezone
from pathlib import Path

LANDFALL = "2012-10-29T23:30Z"


def epoch(text):
    return int(datetime.strptime(text, "%Y-%m-%dT%H:%MZ").replace(tzinfo=timezone.utc).timestamp())


TRACK = [
    ("2012-10-24T12:00Z", 17.4, -76.8, 130, 970, "H1"),
    ("2012-10-25T06:00Z", 20.0, -75.8, 175, 954, "H2"),
    ("2012-10-25T18:00Z", 23.2, -75.5, 150, 964, "H1"),
    ("2012-10-26T12:00Z", 26.3, -76.9, 120, 968, "H1"),
    ("2012-10-27T12:00Z", 28.7, -76.8, 120, 961, "H1"),
    ("2012-10-28T12:00Z", 32.0, -72.3, 120, 953, "H1"),
    ("2012-10-29T12:00Z", 36.0, -71.0, 150, 943, "H1"),
    ("2012-10-29T18:00Z", 38.3, -73.0, 150, 940, "H1"),
    ("2012-10-29T23:30Z", 39.4, -74.4, 130, 945, "PTC"),
    ("2012-10-30T06:00Z", 40.1, -76.1, 85, 960, "PTC"),
    ("2012-10-30T18:00Z", 40.7, -78.4, 55, 990, "PTC"),
]

PLACES = [(40.71, -74.0), (40.73, -73.99), (39.36, -74.43), (40.22, -74.76), (26.12, -80.14),
          (41.88, -87.63), (38.9, -77.03), (42.36, -71.06), None, None]

PRE_TEMPLATES = [
    "Watching the {x} debate tonight and the governor made some strong points",
    "Early voting lines at the library were longer than {x} expected",
    "Obama campaign office downtown is handing out {x} stickers again",
    "Presidential polls keep shifting and my {x} group chat is arguing nonstop",
    "Forecast says more rain this week so the {x} trip might be cancelled",
    "Wind picked up near the harbor and the {x} boats came in early",
    "Heard the tropical storm could turn toward the coast by {x} next week",
    "Weather radar shows a huge band of clouds over the {x} again",
    "Giants looked sharp against the {x} defense on Sunday afternoon",
    "Yankees season is over but I am still wearing my {x} cap",
    "Jets fans deserve better than that {x} performance honestly",
    "NFL fantasy league update my {x} team finally won a game",
    "Gas prices jumped again at the station on {x} avenue this morning",
    "Wall street closed higher after the {x} earnings reports came out",
    "Small business owners on our block are worried about {x} rent",
    "The economy debate keeps coming back to {x} jobs and taxes",
    "Solar panels on the {x} rooftop are finally producing power",
    "Climate talk at the community center drew a big {x} crowd",
    "Energy bill this month was way higher than the {x} estimate",
    "New phone update broke half my {x} apps and battery life",
    "Tech meetup tonight covered open source tools for {x} projects",
    "Played the new game until three in the morning with {x} friends",
    "Local news crew filmed a story about the {x} school fundraiser",
    "Reading about trade tensions with China over {x} imports",
    "Coffee with old friends from the {x} neighborhood made my day",
    "Trying a new recipe tonight with roasted {x} and garlic",
    "Subway delays again on the {x} line during rush hour",
    "Concert at the park was loud and fun with the {x} band",
    "Volunteered at the food bank sorting cans of {x} soup",
    "Movie night picks include an old {x} classic and popcorn",
    "Morning run along the river with clear skies and {x} views",
    "Finished painting the {x} room and it looks great",
    "Library book sale had a whole shelf of {x} novels",
    "Halloween costume plans involve a lot of {x} face paint",
    "Neighborhood cleanup crew collected bags of {x} leaves",
    "Power flickered twice tonight during the {x} storm warning",
    "Stocking up on water batteries and {x} just in case",
    "City officials held a press briefing about {x} evacuation routes",
    "Grocery store shelves near the {x} aisle were already empty",
    "Hurricane tracking maps keep changing every {x} hours",
]
FILL = ["city", "north", "late", "blue", "garden", "river", "second", "weekend", "family", "office", "bridge",
        "corner", "summer", "harbor", "local", "campus", "sunday", "spare", "bright", "quiet"]

PANIC_POSTS = [
    "OMG the water is coming into the basement we are so scared please HELP",
    "Power is out and the wind is SCREAMING outside I am terrified right now!!!",
    "Trees crashing down on our street we are trapped and panicking send help",
    "This is a nightmare the flooding keeps rising and nobody is answering the phone",
    "I can hear the walls shaking and I am so afraid we will lose the house!!!",
    "Scared out of my mind the river just flooded the whole block please pray for us",
]
CALM_POSTS = [
    "Power is out but we are fine with candles and a radio for the night",
    "Storm passed over our area last night and the cleanup crews are already working",
    "Checked on the neighbors and everyone is safe after the hurricane went through",
    "Some branches down in the yard but otherwise the house held up well",
    "Listening to the official updates and staying indoors until the wind calms down",
    "Shelter downtown has plenty of space and volunteers are handing out blankets",
]
OFFTOPIC_POSTS = [
    "Cannot wait for the giants game next weekend with the whole crew",
    "Finally finished the novel I started reading over the summer break",
]

TONES = ["Casual, Humorous, Restless", "Informative, Calm, Friendly", "Anxious, Emotional, Direct",
         "Sarcastic, Playful, Blunt", "Formal, Measured, Serious"]


def ppdts_sheet(rng, answered=18):
    lines = []
    for q in range(1, answered + 1):
        score = rng.randint(1, 4)
        lines.append(f"{q}. **Q{q}: {score}** (Reasoned from the profile traits and prior weather exposure.);")
    return "\n".join(lines)


def arousal_reply(scores, percent):
    names = ["Awareness", "Coping", "Uncertainty", "Novelty"]
    lines = [f"**{n}: {s}/5** (Derived from the profile and the risk perception answers.);" for n, s in zip(names, scores)]
    if percent is not None:
        lines.append(f"**[{percent}%]**")
    return "\n".join(lines)


def verdict(passes):
    names = ["Psychological", "Linguistic", "Factual", "Panic"]
    reasons = {
        True: "The tweet is consistent with the profile and context.",
        False: "The tweet does not match this dimension for the user.",
    }
    return ";\n".join(f"**{n}: {'YES' if p else 'NO'}** ({reasons[p]})" for n, p in zip(names, passes))


def tweet(text):
    return f"[{text}]\n### End"


def build_posts(rng, labels):
    rows = []
    pid = 0
    start = epoch("2012-10-14T12:00Z")
    landfall = epoch(LANDFALL)
    users = [f"u{i:02d}" for i in range(1, 26)]
    for idx, uid in enumerate(users):
        place = PLACES[idx % len(PLACES)]
        followers = rng.randint(20, 4000)
        followees = rng.randint(20, 900)
        templates = rng.sample(PRE_TEMPLATES, 13)
        times = sorted(rng.randint(start, landfall - 3600) for _ in templates)
        for t, tpl in zip(times, templates):
            pid += 1
            post = {"post_id": f"p{pid:04d}", "user_id": uid, "timestamp": t,
                    "text": tpl.format(x=rng.choice(FILL)), "follower_count": followers, "followee_count": followees}
            if place and rng.random() < 0.7:
                post["latitude"], post["longitude"] = place
            rows.append(post)
        # noise that ingest must remove
        if idx % 5 == 0:
            pid += 1
            rows.append({"post_id": f"p{pid:04d}", "user_id": uid, "timestamp": times[-1] + 60,
                         "text": "RT @newsdesk: " + rows[-1]["text"] + " http://t.co/x1", "follower_count": followers,
                         "followee_count": followees})
        if idx % 4 == 0:
            pid += 1
            rows.append({"post_id": f"p{pid:04d}", "user_id": uid, "timestamp": times[0] + 30, "text": "so windy lol",
                         "follower_count": followers, "followee_count": followees})
        pool = PANIC_POSTS if labels[uid] == "Panic" else CALM_POSTS
        post_texts = rng.sample(pool, 2)
        if idx % 6 == 1:
            post_texts.append(rng.choice(OFFTOPIC_POSTS))
        for k, text in enumerate(post_texts):
            pid += 1
            rows.append({"post_id": f"p{pid:04d}", "user_id": uid, "timestamp": landfall + 1800 + 3600 * k + idx,
                         "text": text, "follower_count": followers, "followee_count": followees})
    return users, rows


def write_posts(path, rows):
    with open(path, "w") as f:
        for i, r in enumerate(rows):
            f.write(json.dumps(r) + "\n")
            if i == 40:
                f.write('{"post_id": "bad1", "user_id": "u02", "text": "missing timestamp field here"}\n')
            if i == 120:
                f.write("{not json at all\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--binary", required=True)
    ap.add_argument("--out", default="fixtures/sandy25")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(2012)

    with open(out / "disaster_context.csv", "w") as f:
        f.write("# event: Hurricane Sandy (approximate track)\n")
        f.write(f"# landfall: {LANDFALL}\n")
        f.write("timestamp,latitude,longitude,max_wind_kmh,pressure_hpa,category\n")
        for row in TRACK:
            f.write(",".join(str(v) for v in row) + "\n")

    config = {
        "corpus": {"posts": "posts.jsonl", "labels": "labels.csv", "disaster_time": LANDFALL},
        "disaster_context": "disaster_context.csv",
        "assets_dir": "../../assets",
        "out_dir": "out",
        "mock_script": "mock_script.json",
        "seed": 2012,
        "max_in_flight": 4,
        "annotation": {"human_rounds": "human_rounds.csv"},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")

    # provisional labels; the partition depends only on the retained ids and the seed
    provisional = {f"u{i:02d}": "NoPanic" for i in range(1, 26)}
    users, rows = build_posts(random.Random(7), provisional)
    write_posts(out / "posts.jsonl", rows)
    with open(out / "labels.csv", "w") as f:
        f.write("user_id,label\n")
        for u in users:
            f.write(f"{u},NoPanic\n")
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([args.binary, "--config", str(out / "config.json"), "--out-dir", tmp, "ingest"], check=True)
        test = sorted(json.load(open(Path(tmp) / "partition.json"))["test"])
    assert len(test) == 5, test
    roles = dict(zip(["invalid", "refused", "retry", "fallback", "panic"], test))

    labels = {}
    for u in users:
        labels[u] = "Panic" if rng.random() < 0.35 else "NoPanic"
    labels[roles["invalid"]] = "Panic"
    labels[roles["refused"]] = "NoPanic"
    labels[roles["retry"]] = "NoPanic"
    labels[roles["fallback"]] = "Panic"
    labels[roles["panic"]] = "Panic"
    users, rows = build_posts(random.Random(7), labels)
    write_posts(out / "posts.jsonl", rows)
    with open(out / "labels.csv", "w") as f:
        f.write("user_id,label\n")
        for u in users:
            f.write(f"{u},{labels[u]}\n")
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([args.binary, "--config", str(out / "config.json"), "--out-dir", tmp, "ingest"], check=True)
        part = json.load(open(Path(tmp) / "partition.json"))
        assert sorted(part["test"]) == test
        stats = json.load(open(Path(tmp) / "ingest_stats.json"))
        assert stats["users_retained"] == 25, stats
        timelines = [json.loads(l) for l in open(Path(tmp) / "timelines.jsonl")]

    turns = []

    def reply(session, turn, text):
        turns.append({"session": session, "turn": turn, "reply": text})

    # profile: tone for everyone, one user never answers in format
    stubborn = sorted(set(users) - set(test))[3]
    for i, u in enumerate(users):
        if u == stubborn:
            reply(f"{u}/tone", 0, "This user mostly sounds casual and a bit funny.")
            reply(f"{u}/tone", 1, "Overall I would call the tone relaxed.")
        else:
            reply(f"{u}/tone", 0, TONES[i % len(TONES)])

    srng = random.Random(99)
    r = roles
    # invalid questionnaire: 17 answers
    reply(r["invalid"], 0, "Data understood.")
    reply(r["invalid"], 1, ppdts_sheet(srng, 17))
    # refusal at stage 1
    turns.append({"session": r["refused"], "turn": 0,
                  "refusal": "The request was blocked by the provider content filter."})
    # retry then pass, calm band
    reply(r["retry"], 0, "Data understood.")
    reply(r["retry"], 1, ppdts_sheet(srng))
    reply(r["retry"], 2, arousal_reply([2, 2, 2, 1], 30))
    reply(r["retry"], 3, tweet("Power is out again tonight. Everyone stay home and keep your phones charged #Sandy"))
    reply(f"{r['retry']}/expert/1", 0, verdict([True, False, True, True]))
    reply(r["retry"], 4, tweet("Lights out here but we are fine, candles lit and radio on. Stay safe #Sandy #StaySafe"))
    reply(f"{r['retry']}/expert/2", 0, verdict([True, True, True, True]))
    # no reported percentage: fallback formula, never verified
    reply(r["fallback"], 0, "Data understood.")
    reply(r["fallback"], 1, ppdts_sheet(srng))
    reply(r["fallback"], 2, arousal_reply([4, 3, 3, 3], None))
    calm = [
        "Wind is picking up but we are staying in and watching the news #Sandy",
        "Checked the supplies again, water and batteries ready #HurricaneSandy",
        "Rain is heavy now, staying indoors with the family #Sandy",
        "Storm is loud outside but we are okay for now #Sandy",
    ]
    for a, text in enumerate(calm):
        reply(r["fallback"], 3 + a, tweet(text))
        reply(f"{r['fallback']}/expert/{a + 1}", 0, verdict([True, True, True, False]))
    # panic, with one malformed arousal reply before the re-prompt
    reply(r["panic"], 0, "Data understood.")
    reply(r["panic"], 1, ppdts_sheet(srng))
    reply(r["panic"], 2, "The user seems quite anxious about the storm overall.")
    reply(r["panic"], 3, arousal_reply([5, 4, 4, 3], 80))
    reply(r["panic"], 4, tweet("OMG the water is RISING so fast!!! We are TRAPPED on the second floor please HELP #Sandy #help"))
    reply(f"{r['panic']}/expert/1", 0, verdict([True, True, True, True]))

    # annotation of every post-phase post
    human_rows = []
    hrng = random.Random(5)
    post_posts = sorted((p for t in timelines for p in t["post_posts"]), key=lambda p: p["post_id"])
    for k, p in enumerate(post_posts):
        pid, text = p["post_id"], p["text"]
        offtopic = text in OFFTOPIC_POSTS
        panicky = any(w in text.lower() for w in ["scared", "terrified", "panicking", "nightmare", "afraid", "help"])
        if k == 3:
            reply(f"annotate/{pid}/relevance", 0, "Maybe, hard to say.")
            reply(f"annotate/{pid}/relevance", 1, "Possibly related.")
        elif offtopic:
            reply(f"annotate/{pid}/relevance", 0, "No, the text does not mention the hurricane or its impacts.")
            continue
        else:
            reply(f"annotate/{pid}/relevance", 0,
                  "Yes, the text is relevant to Hurricane Sandy. It describes conditions during the storm.")
        if panicky:
            reply(f"annotate/{pid}/panic", 0,
                  "Yes. The text reflects panic emotions through urgent pleas and fear words.")
        else:
            reply(f"annotate/{pid}/panic", 0, "No. Calm reporting without signs of fear.")
        if k % 4 == 0:
            for rnd in range(1, hrng.randint(1, 3) + 1):
                vote = panicky if hrng.random() < 0.85 else not panicky
                human_rows.append((pid, rnd, "yes" if vote else "no"))

    (out / "mock_script.json").write_text(json.dumps({"turns": turns}, indent=1) + "\n")
    with open(out / "human_rounds.csv", "w") as f:
        f.write("post_id,round,label\n")
        for pid, rnd, lab in human_rows:
            f.write(f"{pid},{rnd},{lab}\n")
    (out / "roles.json").write_text(json.dumps(roles, indent=2) + "\n")

    cal = [(t, "Panic") for t in PANIC_POSTS] + [(t, "NoPanic") for t in CALM_POSTS + OFFTOPIC_POSTS]
    cal += [
        ("HELP!!! the roof is GONE and we are so scared", "Panic"),
        ("we are stuck in the car and the water keeps rising omg", "Panic"),
        ("terrified of the next gust please let this end", "Panic"),
        ("Nice quiet morning after the storm, coffee and sunshine", "NoPanic"),
        ("Bridge reopened and traffic is moving normally again", "NoPanic"),
        ("Donated blankets at the shelter, lots of kind volunteers", "NoPanic"),
    ]
    with open(out / "calibration.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["text", "label"])
        w.writerows(cal)
    print("roles:", roles)


if __name__ == "__main__":
    main()
