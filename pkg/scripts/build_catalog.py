"""Regenerate the bundled synthetic housing catalog.

Usage: python scripts/build_catalog.py [output.json]

Content is invented. Every listing is written for exactly one persona and its
blurb ends with an "Ideal for" cue naming that persona.
"""

import json
import random
import sys
from pathlib import Path

PERSONAS = [
    ("First-Time Homebuyers",
     "Young professionals or couples buying their first home on a careful budget.",
     "You are a first-time homebuyer. You want an affordable, move-in ready starter "
     "home with low maintenance costs and room to grow."),
    ("Upgrade to a Larger Home",
     "Growing families who have outgrown their current house and need more space.",
     "You are upgrading to a larger home. Your family needs extra bedrooms, a bigger "
     "yard, and space for kids to play."),
    ("Downsizing",
     "Empty nesters and retirees trading a big house for something smaller and simpler.",
     "You are downsizing. You want a smaller, single-level home that is easy to "
     "maintain and close to services."),
    ("Investment Buyers",
     "Buyers looking for rental income or resale upside rather than a primary residence.",
     "You are an investment buyer. You look for properties with strong rental demand, "
     "value-add potential, and good resale upside."),
    ("Relocation for Work",
     "Professionals moving to a new city for a job who need a convenient commute.",
     "You are relocating for work. You need a home close to business districts and "
     "transit so you can settle in quickly."),
    ("Vacation Homes",
     "Buyers seeking a second home near the water, the mountains, or resort towns.",
     "You are shopping for a vacation home. You love scenic views, waterfront or "
     "mountain settings, and places that feel like a getaway."),
    ("Eco-Conscious Buyers",
     "Buyers who prioritize energy efficiency, solar power, and sustainable materials.",
     "You are an eco-conscious buyer. You prefer energy-efficient homes with solar "
     "panels, sustainable materials, and a small carbon footprint."),
    ("Urban Dwellers",
     "City lovers who want walkability, nightlife, and modern condos near downtown.",
     "You are an urban dweller. You want a modern home in the heart of the city, "
     "walking distance to restaurants, transit, and nightlife."),
    ("Rural Home Seekers",
     "Buyers wanting acreage, privacy, and room for gardens, animals, or farming.",
     "You are a rural home seeker. You want land, privacy, and space for gardening, "
     "animals, or small-scale farming."),
    ("Multigenerational Living",
     "Families housing grandparents, parents, and children under one roof.",
     "You are buying for multigenerational living. You need separate living quarters, "
     "many bedrooms, and accessibility for older relatives."),
]

NAMES = [
    ["Maple Starter Cottage", "Birch Lane Townhome", "Cedar Row Bungalow", "Willow Court Condo"],
    ["Oakridge Family Colonial", "Summit View Two-Story", "Meadowbrook Craftsman", "Heritage Park Estate"],
    ["Harbor Point Ranch", "Quail Run Patio Home", "Lakeside Single-Level", "Garden Gate Villa"],
    ["Elm Street Duplex", "Fourplex on Main", "Fixer Upper on Pine", "College Row Rental"],
    ["Tech Corridor Condo", "Station Square Flat", "Midtown Commuter Home", "Business Park Townhouse"],
    ["Seaside Retreat", "Alpine Chalet", "Pine Lake Cabin", "Sunset Beach Bungalow"],
    ["Solar Ridge Modern", "Green Leaf Passive House", "Bamboo Grove Eco Home", "Windmill Hill Cottage"],
    ["Downtown Loft", "Skyline Penthouse", "Arts District Condo", "Riverwalk Studio Flat"],
    ["Prairie Farmhouse", "Hilltop Acreage", "Red Barn Homestead", "Creekside Ranchette"],
    ["Grand Oak Compound", "Twin Suite Residence", "Family Circle Estate", "Courtyard Guest-House Home"],
]

FEATURES = [
    "fresh paint, a compact fenced yard, and an updated kitchen with new appliances",
    "a finished basement, a large backyard, and a bonus playroom above the garage",
    "single-level living, wide doorways, and a low-maintenance landscaped yard",
    "separate entrances, stable tenant history, and strong rental comparables nearby",
    "a short walk to the light rail, a home office nook, and secure parking",
    "sweeping views, a wraparound deck, and easy access to trails and the shoreline",
    "rooftop solar, triple-pane windows, and a heat-pump system with low utility bills",
    "floor-to-ceiling windows, a rooftop terrace, and cafes right outside the lobby",
    "several acres of pasture, a large barn, and a well-kept vegetable garden",
    "an in-law suite with its own kitchenette, many bedrooms, and a step-free entry",
]


def blurb(name, persona, feature, sqft, beds, baths, year, lot):
    return (
        f"{name} is a {beds}-bedroom, {baths}-bath home of {sqft:,} square feet built in {year} "
        f"on a {lot} lot. It offers {feature}. Natural light fills the main living area, "
        f"the kitchen opens to a casual dining space, and the primary suite has generous "
        f"closet space. Recent updates include the roof and the HVAC system, so the next "
        f"owner can move in without surprises. Neighbors describe the street as quiet and "
        f"friendly, and daily errands are easy. Schedule a showing before this one is gone. "
        f"Ideal for: {persona}."
    )


def build(seed=2024):
    rng = random.Random(seed)
    personas = [
        {"id": i, "name": name, "description": desc, "prompt_snippet": snippet}
        for i, (name, desc, snippet) in enumerate(PERSONAS)
    ]
    listings = []
    for pid, names in enumerate(NAMES):
        for j, name in enumerate(names):
            start = rng.randrange(120, 281, 5) * 1000
            # true values end in 50 so they can never collide with a legal bid amount
            true_value = round(start * rng.uniform(1.4, 2.4) / 100) * 100 + 50
            sqft = rng.randrange(900, 4200, 50)
            beds = rng.randint(2, 6)
            baths = rng.choice([1, 1.5, 2, 2.5, 3, 3.5])
            year = rng.randint(1948, 2022)
            lot = rng.choice(["0.1-acre", "0.25-acre", "0.5-acre", "1-acre", "5-acre"])
            listings.append({
                "id": f"H{pid:02d}{j}",
                "name": name,
                "description": blurb(name, PERSONAS[pid][0], FEATURES[pid],
                                     sqft, beds, baths, year, lot),
                "starting_price": start,
                "true_value": true_value,
                "matched_personas": [pid],
                "features": {"sqft": sqft, "beds": beds, "baths": baths,
                             "year_built": year, "lot": lot},
            })
    return {"personas": personas, "listings": listings}


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "harbor" / "data" / "catalog.json")
    out.write_text(json.dumps(build(), indent=2) + "\n")
    print(f"wrote {out}")
