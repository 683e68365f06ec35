#include "llmceg/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <set>
#include <unordered_set>
#include <utility>

#include "llmceg/errors.hpp"
#include "llmceg/rng.hpp"

namespace llmceg::synthgen {

namespace {

constexpr std::array<std::string_view, 100> kFirstNames = {
    "Jennifer", "Michael",  "Sarah",    "David",    "Emily",    "James",    "Olivia",   "Robert",   "Sophia",
    "William",  "Ava",      "Joseph",   "Isabella", "Thomas",   "Mia",      "Charles",  "Charlotte", "Daniel",
    "Amelia",   "Matthew",  "Harper",   "Anthony",  "Evelyn",   "Mark",     "Abigail",  "Donald",   "Ella",
    "Steven",   "Grace",    "Paul",     "Chloe",    "Andrew",   "Victoria", "Joshua",   "Riley",    "Kenneth",
    "Aria",     "Kevin",    "Lily",     "Brian",    "Aubrey",   "George",   "Zoey",     "Timothy",  "Penelope",
    "Ronald",   "Layla",    "Edward",   "Nora",     "Jason",    "Hannah",   "Jeffrey",  "Addison",  "Ryan",
    "Eleanor",  "Jacob",    "Stella",   "Gary",     "Natalie",  "Nicholas", "Leah",     "Eric",     "Hazel",
    "Jonathan", "Violet",   "Stephen",  "Aurora",   "Larry",    "Savannah", "Justin",   "Audrey",   "Scott",
    "Brooklyn", "Brandon",  "Bella",    "Benjamin", "Claire",   "Samuel",   "Skylar",   "Gregory",  "Lucy",
    "Alexander", "Paisley", "Frank",    "Everly",   "Patrick",  "Anna",     "Raymond",  "Caroline", "Jack",
    "Nova",     "Dennis",   "Genesis",  "Jerry",    "Emilia",   "Tyler",    "Kennedy",  "Aaron",    "Maya",
    "Henry"};

constexpr std::array<std::string_view, 100> kLastNames = {
    "Walsh",    "Smith",     "Johnson",  "Williams", "Brown",    "Jones",    "Garcia",   "Miller",   "Davis",
    "Rodriguez", "Martinez", "Hernandez", "Lopez",   "Gonzalez", "Wilson",   "Anderson", "Taylor",   "Moore",
    "Jackson",  "Martin",    "Lee",      "Perez",    "Thompson", "White",    "Harris",   "Sanchez",  "Clark",
    "Ramirez",  "Lewis",     "Robinson", "Walker",   "Young",    "Allen",    "King",     "Wright",   "Scott",
    "Torres",   "Nguyen",    "Hill",     "Flores",   "Green",    "Adams",    "Nelson",   "Baker",    "Hall",
    "Rivera",   "Campbell",  "Mitchell", "Carter",   "Roberts",  "Gomez",    "Phillips", "Evans",    "Turner",
    "Diaz",     "Parker",    "Cruz",     "Edwards",  "Collins",  "Reyes",    "Stewart",  "Morris",   "Morales",
    "Murphy",   "Cook",      "Rogers",   "Gutierrez", "Ortiz",   "Morgan",   "Cooper",   "Peterson", "Bailey",
    "Reed",     "Kelly",     "Howard",   "Ramos",    "Kim",      "Cox",      "Ward",     "Richardson", "Watson",
    "Brooks",   "Chavez",    "Wood",     "James",    "Bennett",  "Gray",     "Mendoza",  "Ruiz",     "Hughes",
    "Price",    "Alvarez",   "Castillo", "Sanders",  "Patel",    "Myers",    "Long",     "Ross",     "Foster",
    "Jimenez"};

constexpr std::array<std::string_view, 24> kDiagnoses = {
    "Type 2 Diabetes",       "Hypertension",          "Asthma",
    "Chronic Kidney Disease", "Major Depressive Disorder", "Rheumatoid Arthritis",
    "Hypothyroidism",        "Atrial Fibrillation",   "Migraine",
    "Osteoporosis",          "Coronary Artery Disease", "Generalized Anxiety Disorder",
    "Psoriasis",             "Epilepsy",              "Gout",
    "Hyperlipidemia",        "Ulcerative Colitis",    "Multiple Sclerosis",
    "Parkinson Disease",     "Chronic Obstructive Pulmonary Disease", "Obstructive Sleep Apnea",
    "Bipolar Disorder",      "Celiac Disease",        "Heart Failure"};

constexpr std::array<std::string_view, 24> kMedications = {
    "Metformin",    "Lisinopril",    "Albuterol",     "Atorvastatin",  "Levothyroxine", "Amlodipine",
    "Sertraline",   "Omeprazole",    "Losartan",      "Gabapentin",    "Hydrochlorothiazide", "Simvastatin",
    "Warfarin",     "Apixaban",      "Methotrexate",  "Sumatriptan",   "Alendronate",   "Allopurinol",
    "Levetiracetam", "Escitalopram", "Prednisone",    "Insulin Glargine", "Montelukast", "Carvedilol"};

template <std::size_t N>
std::span<const std::string_view> as_span(const std::array<std::string_view, N>& a) {
    return {a.data(), a.size()};
}

template <std::size_t N>
constexpr bool all_filled(const std::array<std::string_view, N>& a) {
    for (std::string_view s : a)
        if (s.empty()) return false;
    return true;
}

static_assert(all_filled(kFirstNames) && all_filled(kLastNames));
static_assert(all_filled(kDiagnoses) && all_filled(kMedications));

// Non-clinical sentence templates; {key} names a slot list below.
constexpr std::array<std::string_view, 12> kTemplates = {
    "The {adj} train to {city} leaves {time} and arrives before {meal}.",
    "It will be {weather} in {city} {day}, so bring a {item}.",
    "The {shop} on {street} Street sells {goods} at a fair price.",
    "My {relative} bought a {color} {vehicle} from a dealer in {city}.",
    "Our team won the {sport} match {day} after a {adj} second half.",
    "The {animal} crossed the {landform} while the {wind} wind blew.",
    "She cooked {food} with {ingredient} for the {event} on {day}.",
    "A flight from {city} to {city} takes about {duration}.",
    "The museum in {city} opens a new exhibit about {topic} {day}.",
    "He ordered a cup of {drink} and read a book about {topic}.",
    "The market near the {landform} is busy every {weekday} morning.",
    "They planted {plant} in the garden before the {season} rain.",
};

struct SlotList {
    std::string_view key;
    std::span<const std::string_view> words;
};

constexpr std::array<std::string_view, 18> kAdj = {"quiet", "crowded", "early", "late", "fast", "slow",
                                                   "bright", "noisy", "modern", "old", "busy", "scenic",
                                                   "cheerful", "famous", "small", "large", "comfortable", "narrow"};
constexpr std::array<std::string_view, 18> kCity = {"Lisbon", "Oslo",   "Denver", "Kyoto",    "Nairobi", "Montreal",
                                                    "Seattle", "Vienna", "Santiago", "Dublin", "Prague",  "Auckland",
                                                    "Boston", "Madrid", "Helsinki", "Toronto", "Lima",    "Cairo"};
constexpr std::array<std::string_view, 6> kTime = {"at dawn", "at noon", "every hour", "in the evening",
                                                   "after sunrise", "before midnight"};
constexpr std::array<std::string_view, 3> kMeal = {"breakfast", "lunch", "dinner"};
constexpr std::array<std::string_view, 8> kWeather = {"sunny", "rainy", "windy", "cloudy",
                                                      "foggy", "snowy", "humid", "cold"};
constexpr std::array<std::string_view, 7> kDay = {"today", "tomorrow", "this weekend", "on Friday",
                                                  "next week", "on Sunday", "tonight"};
constexpr std::array<std::string_view, 8> kItem = {"jacket", "umbrella", "scarf", "hat",
                                                   "sweater", "raincoat", "water bottle", "map"};
constexpr std::array<std::string_view, 8> kShop = {"bakery", "bookshop", "hardware store", "flower shop",
                                                   "grocery", "toy store", "bicycle shop", "tea house"};
constexpr std::array<std::string_view, 8> kStreet = {"Maple", "Oak", "Elm", "Cedar", "Pine", "Willow", "River", "Harbor"};
constexpr std::array<std::string_view, 10> kGoods = {"fresh bread", "used novels", "garden tools", "tulips",
                                                     "apples", "wooden toys", "bicycle bells", "green tea",
                                                     "candles", "postcards"};
constexpr std::array<std::string_view, 7> kRelative = {"brother", "sister", "uncle", "aunt",
                                                       "cousin", "neighbor", "grandfather"};
constexpr std::array<std::string_view, 8> kColor = {"red", "blue", "silver", "black", "white", "yellow", "orange", "purple"};
constexpr std::array<std::string_view, 6> kVehicle = {"bicycle", "truck", "scooter", "van", "motorcycle", "sedan"};
constexpr std::array<std::string_view, 6> kSport = {"soccer", "hockey", "rugby", "cricket", "volleyball", "basketball"};
constexpr std::array<std::string_view, 8> kAnimal = {"fox", "deer", "rabbit", "bear", "horse", "goat", "wolf", "moose"};
constexpr std::array<std::string_view, 7> kLandform = {"valley", "river", "hill", "meadow", "bridge", "forest", "beach"};
constexpr std::array<std::string_view, 5> kWind = {"cool", "warm", "gentle", "strong", "salty"};
constexpr std::array<std::string_view, 8> kFood = {"pasta", "soup", "rice", "pancakes",
                                                   "tacos", "stew", "curry", "noodles"};
constexpr std::array<std::string_view, 8> kIngredient = {"garlic", "basil", "tomatoes", "mushrooms",
                                                         "lemon", "onions", "peppers", "cheese"};
constexpr std::array<std::string_view, 6> kEvent = {"party", "picnic", "festival", "reunion", "wedding", "holiday"};
constexpr std::array<std::string_view, 6> kDuration = {"one hour", "three hours", "half a day",
                                                       "forty minutes", "six hours", "two hours"};
constexpr std::array<std::string_view, 8> kTopic = {"ancient ships", "volcanoes", "jazz music", "bridges",
                                                    "early cameras", "desert plants", "star maps", "clocks"};
constexpr std::array<std::string_view, 6> kDrink = {"coffee", "cocoa", "green tea", "lemonade", "cider", "milk"};
constexpr std::array<std::string_view, 7> kWeekday = {"Monday", "Tuesday", "Wednesday", "Thursday",
                                                      "Friday", "Saturday", "Sunday"};
constexpr std::array<std::string_view, 7> kPlant = {"tomatoes", "roses", "carrots", "sunflowers",
                                                     "beans", "lettuce", "herbs"};
constexpr std::array<std::string_view, 4> kSeason = {"spring", "summer", "autumn", "winter"};

const std::array<SlotList, 26>& slot_lists() {
    static const std::array<SlotList, 26> lists = {{
        {"adj", as_span(kAdj)},           {"city", as_span(kCity)},         {"time", as_span(kTime)},
        {"meal", as_span(kMeal)},         {"weather", as_span(kWeather)},   {"day", as_span(kDay)},
        {"item", as_span(kItem)},         {"shop", as_span(kShop)},         {"street", as_span(kStreet)},
        {"goods", as_span(kGoods)},       {"relative", as_span(kRelative)}, {"color", as_span(kColor)},
        {"vehicle", as_span(kVehicle)},   {"sport", as_span(kSport)},       {"animal", as_span(kAnimal)},
        {"landform", as_span(kLandform)}, {"wind", as_span(kWind)},         {"food", as_span(kFood)},
        {"ingredient", as_span(kIngredient)}, {"event", as_span(kEvent)},   {"duration", as_span(kDuration)},
        {"topic", as_span(kTopic)},       {"drink", as_span(kDrink)},       {"weekday", as_span(kWeekday)},
        {"plant", as_span(kPlant)},       {"season", as_span(kSeason)},
    }};
    return lists;
}

std::span<const std::string_view> lookup_slot(std::string_view key) {
    for (const SlotList& s : slot_lists())
        if (s.key == key) return s.words;
    throw ParameterError("unknown template slot: " + std::string(key));
}

template <typename T>
const T& pick(std::span<const T> items, Rng& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
    return items[dist(rng)];
}

std::string fill_template(std::string_view tmpl, Rng& rng) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const std::size_t close = tmpl.find('}', i);
            out += pick(lookup_slot(tmpl.substr(i + 1, close - i - 1)), rng);
            i = close + 1;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

std::string make_ssn(Rng& rng) {
    std::uniform_int_distribution<int> area(1, 899);
    std::uniform_int_distribution<int> group(1, 99);
    std::uniform_int_distribution<int> serial(1, 9999);
    int a = area(rng);
    while (a == 666) a = area(rng);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d-%02d-%04d", a, group(rng), serial(rng));
    return buf;
}

}  // namespace

std::span<const std::string_view> first_names() { return as_span(kFirstNames); }
std::span<const std::string_view> last_names() { return as_span(kLastNames); }
std::span<const std::string_view> diagnoses() { return as_span(kDiagnoses); }
std::span<const std::string_view> medications() { return as_span(kMedications); }

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> clinical_tokens() {
    std::set<std::string> tokens;
    for (auto list : {diagnoses(), medications()})
        for (std::string_view entry : list)
            for (auto& t : tokenize_words(entry)) tokens.insert(std::move(t));
    return {tokens.begin(), tokens.end()};
}

bool is_valid_ssn(std::string_view ssn) {
    if (ssn.size() != 11 || ssn[3] != '-' || ssn[6] != '-') return false;
    for (std::size_t i = 0; i < ssn.size(); ++i) {
        if (i == 3 || i == 6) continue;
        if (!std::isdigit(static_cast<unsigned char>(ssn[i]))) return false;
    }
    return true;
}

bool is_valid_record(const PiiRecord& r) {
    return !r.name.empty() && !r.diagnosis.empty() && !r.medication.empty() && !r.ssn.empty() && r.age >= 18 &&
           r.age <= 90 && r.salary > 0 && is_valid_ssn(r.ssn);
}

std::vector<PiiRecord> generate_records(std::size_t n, std::uint64_t seed) {
    if (n > kFirstNames.size() * kLastNames.size())
        throw SizeError("requested more records than distinct names available");
    Rng rng(derive_seed(seed, "records"));
    std::uniform_int_distribution<int> age(18, 90);
    std::uniform_int_distribution<long> salary_hundreds(250, 2500);  // 25,000 .. 250,000
    std::set<std::pair<std::string, std::string>> seen_keys;
    std::unordered_set<std::string> seen_ssn;
    std::vector<PiiRecord> out;
    out.reserve(n);
    while (out.size() < n) {
        PiiRecord r;
        r.name = std::string(pick(first_names(), rng)) + " " + std::string(pick(last_names(), rng));
        r.age = age(rng);
        r.diagnosis = std::string(pick(diagnoses(), rng));
        r.medication = std::string(pick(medications(), rng));
        r.salary = salary_hundreds(rng) * 100;
        r.ssn = make_ssn(rng);
        if (seen_ssn.contains(r.ssn) || !seen_keys.emplace(r.name, r.ssn).second) continue;
        seen_ssn.insert(r.ssn);
        out.push_back(std::move(r));
    }
    return out;
}

std::string serialize_record(const PiiRecord& r) {
    return "Patient " + r.name + ", aged " + std::to_string(r.age) + ", has been diagnosed with " + r.diagnosis +
           " and is prescribed " + r.medication + ", earns " + std::to_string(r.salary) + " annually, SSN " + r.ssn +
           ".";
}

SplitCorpus split_corpus(std::span<const PiiRecord> records, std::size_t n_members, std::size_t n_nonmembers,
                         std::uint64_t seed) {
    if (n_members + n_nonmembers > records.size())
        throw SizeError("split needs " + std::to_string(n_members + n_nonmembers) + " records but only " +
                        std::to_string(records.size()) + " are available");
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    std::shuffle(order.begin(), order.end(), rng);

    SplitCorpus split;
    split.seed = seed;
    for (std::size_t i = 0; i < n_members; ++i) {
        split.member_sources.push_back(order[i]);
        split.members.push_back(serialize_record(records[order[i]]));
    }
    for (std::size_t i = n_members; i < n_members + n_nonmembers; ++i) {
        split.nonmember_sources.push_back(order[i]);
        split.nonmembers.push_back(serialize_record(records[order[i]]));
    }
    return split;
}

GeneralCorpus generate_general_corpus(std::size_t n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "general"));
    GeneralCorpus corpus;
    corpus.seed = seed;
    corpus.sentences.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        corpus.sentences.push_back(fill_template(pick(std::span<const std::string_view>(kTemplates), rng), rng));
    return corpus;
}

std::vector<std::string> generate_pretrain_corpus(std::size_t n, std::uint64_t seed,
                                                  std::span<const std::string> held_out) {
    const std::set<std::string_view> excluded(held_out.begin(), held_out.end());
    Rng rng(derive_seed(seed, "pretrain"));
    std::vector<std::string> out;
    out.reserve(n);
    while (out.size() < n) {
        std::string s = fill_template(pick(std::span<const std::string_view>(kTemplates), rng), rng);
        if (!excluded.contains(s)) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace llmceg::synthgen
