#!/usr/bin/env python3
"""Generates data/sample_captions.jsonl, a synthetic audio-caption corpus.

Captions are sampled from a small template grammar of sound sources, actions,
adverbs and places. Any sentence that already looks like a repetition error
(duplicated word, "x and x", a repeated span, a dangling function-word tail)
is rejected so the corpus is clean by construction.

Usage: scripts/make_sample_corpus.py [--count 5000] [--seed 2026] [--out PATH]
"""

import argparse
import json
import random

# (singular, plural, verbs) where each verb is (base, third, ing, past).
V = {
    "bark": ("bark", "barks", "barking", "barked"),
    "growl": ("growl", "growls", "growling", "growled"),
    "howl": ("howl", "howls", "howling", "howled"),
    "whine": ("whine", "whines", "whining", "whined"),
    "meow": ("meow", "meows", "meowing", "meowed"),
    "purr": ("purr", "purrs", "purring", "purred"),
    "chirp": ("chirp", "chirps", "chirping", "chirped"),
    "sing": ("sing", "sings", "singing", "sang"),
    "tweet": ("tweet", "tweets", "tweeting", "tweeted"),
    "squawk": ("squawk", "squawks", "squawking", "squawked"),
    "cry": ("cry", "cries", "crying", "cried"),
    "babble": ("babble", "babbles", "babbling", "babbled"),
    "laugh": ("laugh", "laughs", "laughing", "laughed"),
    "speak": ("speak", "speaks", "speaking", "spoke"),
    "talk": ("talk", "talks", "talking", "talked"),
    "shout": ("shout", "shouts", "shouting", "shouted"),
    "cough": ("cough", "coughs", "coughing", "coughed"),
    "whistle": ("whistle", "whistles", "whistling", "whistled"),
    "yell": ("yell", "yells", "yelling", "yelled"),
    "sneeze": ("sneeze", "sneezes", "sneezing", "sneezed"),
    "chatter": ("chatter", "chatters", "chattering", "chattered"),
    "cheer": ("cheer", "cheers", "cheering", "cheered"),
    "clap": ("clap", "claps", "clapping", "clapped"),
    "applaud": ("applaud", "applauds", "applauding", "applauded"),
    "pass": ("pass", "passes", "passing", "passed"),
    "honk": ("honk", "honks", "honking", "honked"),
    "accelerate": ("accelerate", "accelerates", "accelerating", "accelerated"),
    "idle": ("idle", "idles", "idling", "idled"),
    "rev": ("rev", "revs", "revving", "revved"),
    "hum": ("hum", "hums", "humming", "hummed"),
    "rumble": ("rumble", "rumbles", "rumbling", "rumbled"),
    "approach": ("approach", "approaches", "approaching", "approached"),
    "creak": ("creak", "creaks", "creaking", "creaked"),
    "slam": ("slam", "slams", "slamming", "slammed"),
    "flow": ("flow", "flows", "flowing", "flowed"),
    "splash": ("splash", "splashes", "splashing", "splashed"),
    "drip": ("drip", "drips", "dripping", "dripped"),
    "trickle": ("trickle", "trickles", "trickling", "trickled"),
    "run": ("run", "runs", "running", "ran"),
    "fall": ("fall", "falls", "falling", "fell"),
    "patter": ("patter", "patters", "pattering", "pattered"),
    "blow": ("blow", "blows", "blowing", "blew"),
    "ring": ("ring", "rings", "ringing", "rang"),
    "chime": ("chime", "chimes", "chiming", "chimed"),
    "tick": ("tick", "ticks", "ticking", "ticked"),
    "buzz": ("buzz", "buzzes", "buzzing", "buzzed"),
    "vibrate": ("vibrate", "vibrates", "vibrating", "vibrated"),
    "wail": ("wail", "wails", "wailing", "wailed"),
    "blare": ("blare", "blares", "blaring", "blared"),
    "fly": ("fly", "flies", "flying", "flew"),
    "roar": ("roar", "roars", "roaring", "roared"),
    "hover": ("hover", "hovers", "hovering", "hovered"),
    "bleat": ("bleat", "bleats", "bleating", "bleated"),
    "moo": ("moo", "moos", "mooing", "mooed"),
    "crow": ("crow", "crows", "crowing", "crowed"),
    "quack": ("quack", "quacks", "quacking", "quacked"),
    "croak": ("croak", "croaks", "croaking", "croaked"),
    "crackle": ("crackle", "crackles", "crackling", "crackled"),
    "play": ("play", "plays", "playing", "played"),
    "beep": ("beep", "beeps", "beeping", "beeped"),
    "knock": ("knock", "knocks", "knocking", "knocked"),
    "type": ("type", "types", "typing", "typed"),
    "walk": ("walk", "walks", "walking", "walked"),
    "rustle": ("rustle", "rustles", "rustling", "rustled"),
    "crash": ("crash", "crashes", "crashing", "crashed"),
    "snore": ("snore", "snores", "snoring", "snored"),
    "gurgle": ("gurgle", "gurgles", "gurgling", "gurgled"),
    "spray": ("spray", "sprays", "spraying", "sprayed"),
    "sizzle": ("sizzle", "sizzles", "sizzling", "sizzled"),
    "clank": ("clank", "clanks", "clanking", "clanked"),
    "screech": ("screech", "screeches", "screeching", "screeched"),
    "grind": ("grind", "grinds", "grinding", "ground"),
    "whir": ("whir", "whirs", "whirring", "whirred"),
    "bang": ("bang", "bangs", "banging", "banged"),
    "tap": ("tap", "taps", "tapping", "tapped"),
    "crunch": ("crunch", "crunches", "crunching", "crunched"),
    "sputter": ("sputter", "sputters", "sputtering", "sputtered"),
    "pour": ("pour", "pours", "pouring", "poured"),
    "echo": ("echo", "echoes", "echoing", "echoed"),
}

SOURCES = [
    ("dog", "dogs", ["bark", "growl", "howl", "whine"]),
    ("puppy", "puppies", ["bark", "whine", "howl"]),
    ("cat", "cats", ["meow", "purr"]),
    ("bird", "birds", ["chirp", "sing", "tweet", "squawk"]),
    ("crow", "crows", ["squawk"]),
    ("baby", "babies", ["cry", "babble", "laugh"]),
    ("child", "children", ["laugh", "shout", "talk", "play", "yell"]),
    ("man", "men", ["speak", "talk", "shout", "cough", "whistle", "laugh", "yell", "sneeze", "snore"]),
    ("woman", "women", ["speak", "talk", "sing", "laugh", "cough", "shout", "sneeze"]),
    ("person", "people", ["talk", "speak", "cough", "walk", "type", "knock", "whistle"]),
    ("crowd", "crowds", ["cheer", "applaud", "roar", "chatter", "clap"]),
    ("car", "cars", ["pass", "honk", "accelerate", "idle", "approach", "screech"]),
    ("truck", "trucks", ["pass", "honk", "idle", "rumble", "approach"]),
    ("engine", "engines", ["run", "idle", "rev", "hum", "sputter", "roar"]),
    ("motorcycle", "motorcycles", ["rev", "pass", "accelerate", "roar", "idle"]),
    ("train", "trains", ["pass", "rumble", "approach", "screech"]),
    ("door", "doors", ["creak", "slam", "bang"]),
    ("stream", "streams", ["flow", "trickle", "gurgle"]),
    ("faucet", "faucets", ["run", "drip", "spray"]),
    ("bell", "bells", ["ring", "chime"]),
    ("clock", "clocks", ["tick", "chime"]),
    ("phone", "phones", ["ring", "buzz", "vibrate", "beep"]),
    ("siren", "sirens", ["wail", "blare"]),
    ("airplane", "airplanes", ["fly", "roar", "pass", "approach"]),
    ("helicopter", "helicopters", ["hover", "fly", "approach"]),
    ("sheep", "sheep", ["bleat"]),
    ("cow", "cows", ["moo"]),
    ("rooster", "roosters", ["crow"]),
    ("duck", "ducks", ["quack", "splash"]),
    ("frog", "frogs", ["croak"]),
    ("insect", "insects", ["buzz", "chirp"]),
    ("bee", "bees", ["buzz", "hum"]),
    ("fire", "fires", ["crackle"]),
    ("radio", "radios", ["play", "buzz", "crackle"]),
    ("machine", "machines", ["hum", "whir", "grind", "beep", "clank"]),
    ("drill", "drills", ["whir", "grind"]),
    ("fan", "fans", ["whir", "hum"]),
    ("alarm", "alarms", ["ring", "beep", "blare"]),
    ("horn", "horns", ["blare", "honk"]),
    ("hammer", "hammers", ["bang", "tap"]),
    ("pan", "pans", ["sizzle", "clank"]),
    ("wave", "waves", ["crash", "roar"]),
    ("leaf", "leaves", ["rustle", "crunch"]),
    ("drum", "drums", ["bang", "echo"]),
]

MASS = [
    ("water", ["run", "flow", "splash", "drip", "trickle", "pour", "gurgle"]),
    ("rain", ["fall", "patter", "pour"]),
    ("wind", ["blow", "howl", "roar", "whistle"]),
    ("thunder", ["rumble", "crash", "roar"]),
    ("music", ["play", "echo"]),
    ("traffic", ["pass", "rumble", "hum"]),
    ("gravel", ["crunch"]),
]

ADJ = {
    "dog": ["small", "large", "young"], "bird": ["small", "distant"],
    "man": ["young", "old"], "woman": ["young", "old"], "car": ["fast", "loud"],
    "engine": ["loud", "large"], "train": ["distant", "long"], "door": ["wooden", "heavy"],
    "baby": ["young"], "crowd": ["large", "excited"], "machine": ["large", "loud"],
    "bell": ["large", "small"], "phone": ["loud"], "truck": ["large", "heavy"],
}

ADVERBS = ["loudly", "softly", "quietly", "repeatedly", "continuously", "rapidly",
           "slowly", "briefly", "intermittently", "constantly", "faintly",
           "steadily", "occasionally", "suddenly", "frantically", "gently",
           "nearby", "outside", "again"]

PLACES = ["in the distance", "in the background", "on a busy street",
          "in a large room", "near a river", "in a park", "on the roof",
          "inside a building", "in a small kitchen", "at a train station",
          "in a forest", "on a farm", "in an open field", "near the shore",
          "down the road", "behind a wall", "in a quiet room", "at night",
          "on a windy day", "through the window", "in a crowded hall",
          "in an office", "on the sidewalk", "under a bridge"]

CONNECTORS = ["while", "and", "as", "then", "before", "and then", "but"]

FILLER_HEADS = ["the sound of", "the noise of"]

TAIL_WORDS = {"and", "a", "the", "with", "in", "then", "as", "while", "to", "of"}
CONJ_PHRASES = [["and"], ["while"], ["as"], ["and", "then"], ["then"], ["or"],
                ["but"], ["followed", "by"]]


def looks_erroneous(tokens):
    n = len(tokens)
    if any(tokens[i] == tokens[i + 1] for i in range(n - 1)):
        return True
    for i in range(n):
        for conj in CONJ_PHRASES:
            j = i + 1 + len(conj)
            if j < n and tokens[i + 1:j] == conj and tokens[j] == tokens[i]:
                return True
    for length in range(2, n):
        for i in range(n - length + 1):
            span = tokens[i:i + length]
            for j in range(i + 1, n - length + 1):
                if tokens[j:j + length] == span and (length >= 3 or j > i):
                    if length >= 3:
                        return True
                    for conj in CONJ_PHRASES:
                        if tokens[j - len(conj):j] == conj and j - len(conj) == i + length:
                            return True
    return tokens[-1] in TAIL_WORDS


class Grammar:
    def __init__(self, rng):
        self.rng = rng

    def choice(self, xs):
        return self.rng.choice(xs)

    def noun_phrase(self):
        r = self.rng.random()
        if r < 0.2:
            name, verbs = self.choice(MASS)
            return name.split(), verbs, "mass"
        sing, plur, verbs = self.choice(SOURCES)
        if r < 0.45 and sing != plur:
            det = self.choice(["", "", "some", "several", "two", "many"])
            words = ([det] if det else []) + [plur]
            return words, verbs, "plural"
        det = self.choice(["a", "a", "a", "the", "one"])
        adj = ADJ.get(sing)
        words = [det]
        if adj and self.rng.random() < 0.3:
            adj_word = self.choice(adj)
            if det == "a" and adj_word[0] in "aeiou":
                words = ["an"]
            words.append(adj_word)
        elif det == "a" and sing[0] in "aeiou":
            words = ["an"]
        words.append(sing)
        return words, verbs, "singular"

    def verb_group(self, verbs, number):
        picked = [self.choice(verbs)]
        if len(verbs) > 1 and self.rng.random() < 0.2:
            picked = self.rng.sample(verbs, 2)
        r = self.rng.random()
        if r < 0.4:
            aux, slot = [], 1 if number != "plural" else 0
        elif r < 0.8:
            aux, slot = ["are" if number == "plural" else "is"], 2
        else:
            aux, slot = [], 3
        words = aux + [V[picked[0]][slot]]
        if len(picked) == 2:
            words += ["and", V[picked[1]][slot]]
        return words

    def clause(self, allow_place=True):
        np, verbs, number = self.noun_phrase()
        words = np + self.verb_group(verbs, number)
        if self.rng.random() < 0.3:
            words.append(self.choice(ADVERBS))
        if allow_place and self.rng.random() < 0.35:
            words += self.choice(PLACES).split()
        return words

    def ing_clause(self):
        np, verbs, _ = self.noun_phrase()
        words = np + [V[self.choice(verbs)][2]]
        if self.rng.random() < 0.25:
            words.append(self.choice(ADVERBS))
        return words

    def sentence(self):
        r = self.rng.random()
        if r < 0.35:
            return self.clause()
        if r < 0.6:
            first = self.clause(allow_place=False)
            return first + self.choice(CONNECTORS).split() + self.clause()
        if r < 0.72:
            first = self.clause(allow_place=False)
            return first + ["followed", "by"] + self.ing_clause()
        if r < 0.84:
            head = self.choice(FILLER_HEADS).split()
            words = head + self.ing_clause()
            if self.rng.random() < 0.5:
                words += self.choice(PLACES).split()
            return words
        if r < 0.92:
            np, verbs, number = self.noun_phrase()
            be = "are" if number == "plural" else "is"
            words = ["there", be] + np + [V[self.choice(verbs)][2]]
            if self.rng.random() < 0.5:
                words += self.choice(PLACES).split()
            return words
        door = self.choice(["a door", "the door", "a window", "a drawer", "a gate"]).split()
        action = self.choice([["opened", "and", "closed"], ["opened"], ["closed"],
                              ["slammed", "shut"], ["opened", "slowly"]])
        aux = self.choice([["is", "being"], ["is"], ["was"]])
        return door + aux + action


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--count", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--out", default="data/sample_captions.jsonl")
    args = parser.parse_args()

    rng = random.Random(args.seed)
    grammar = Grammar(rng)
    seen = set()
    out = []
    while len(out) < args.count:
        tokens = grammar.sentence()
        text = " ".join(tokens)
        if text in seen or len(tokens) < 3 or looks_erroneous(tokens):
            continue
        seen.add(text)
        caption = text[0].upper() + text[1:] + "."
        out.append({"id": f"sample_{len(out):05d}", "caption": caption})
    with open(args.out, "w") as f:
        for record in out:
            f.write(json.dumps(record) + "\n")


if __name__ == "__main__":
    main()
