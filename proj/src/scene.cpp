#include "debris/scene.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "debris/errors.hpp"
#include "debris/rng.hpp"

namespace debris {

using nlohmann::json;

namespace {

template <typename E>
E enum_from_string(const std::string& s, const std::map<std::string, E>& table,
                   const char* what) {
    auto it = table.find(s);
    if (it == table.end()) throw DataError(std::string("unknown ") + what + ": '" + s + "'");
    return it->second;
}

const std::map<std::string, RoadType> k_road_types = {
    {"highway", RoadType::highway}, {"freeway", RoadType::freeway},
    {"suburban", RoadType::suburban}, {"urban", RoadType::urban},
    {"rural", RoadType::rural},     {"dirt", RoadType::dirt},
    {"parking", RoadType::parking}};
const std::map<std::string, TimeOfDay> k_times = {
    {"day", TimeOfDay::day},
    {"night", TimeOfDay::night},
    {"dawn_dusk", TimeOfDay::dawn_dusk},
    {"sunset_sunrise", TimeOfDay::sunset_sunrise}};
const std::map<std::string, Weather> k_weathers = {
    {"clear", Weather::clear}, {"sun", Weather::sun},   {"moon", Weather::moon},
    {"cloud", Weather::cloud}, {"rain", Weather::rain}, {"snow", Weather::snow},
    {"fog", Weather::fog}};
const std::map<std::string, TrafficLevel> k_traffic = {
    {"low", TrafficLevel::low}, {"med", TrafficLevel::med}, {"high", TrafficLevel::high}};
const std::map<std::string, ObjectClass> k_classes = {
    {"vehicle", ObjectClass::vehicle},
    {"pedestrian", ObjectClass::pedestrian},
    {"bike", ObjectClass::bike},
    {"debris", ObjectClass::debris},
    {"other", ObjectClass::other}};

} // namespace

const char* to_string(RoadType v) {
    switch (v) {
        case RoadType::highway: return "highway";
        case RoadType::freeway: return "freeway";
        case RoadType::suburban: return "suburban";
        case RoadType::urban: return "urban";
        case RoadType::rural: return "rural";
        case RoadType::dirt: return "dirt";
        case RoadType::parking: return "parking";
    }
    return "?";
}
const char* to_string(TimeOfDay v) {
    switch (v) {
        case TimeOfDay::day: return "day";
        case TimeOfDay::night: return "night";
        case TimeOfDay::dawn_dusk: return "dawn_dusk";
        case TimeOfDay::sunset_sunrise: return "sunset_sunrise";
    }
    return "?";
}
const char* to_string(Weather v) {
    switch (v) {
        case Weather::clear: return "clear";
        case Weather::sun: return "sun";
        case Weather::moon: return "moon";
        case Weather::cloud: return "cloud";
        case Weather::rain: return "rain";
        case Weather::snow: return "snow";
        case Weather::fog: return "fog";
    }
    return "?";
}
const char* to_string(TrafficLevel v) {
    switch (v) {
        case TrafficLevel::low: return "low";
        case TrafficLevel::med: return "med";
        case TrafficLevel::high: return "high";
    }
    return "?";
}
const char* to_string(ObjectClass v) {
    switch (v) {
        case ObjectClass::vehicle: return "vehicle";
        case ObjectClass::pedestrian: return "pedestrian";
        case ObjectClass::bike: return "bike";
        case ObjectClass::debris: return "debris";
        case ObjectClass::other: return "other";
    }
    return "?";
}

RoadType road_type_from_string(const std::string& s) {
    return enum_from_string(s, k_road_types, "road_type");
}
TimeOfDay time_of_day_from_string(const std::string& s) {
    return enum_from_string(s, k_times, "time_of_day");
}
Weather weather_from_string(const std::string& s) {
    return enum_from_string(s, k_weathers, "weather");
}
TrafficLevel traffic_level_from_string(const std::string& s) {
    return enum_from_string(s, k_traffic, "traffic_level");
}
ObjectClass object_class_from_string(const std::string& s) {
    return enum_from_string(s, k_classes, "object class");
}

void validate_record(const SceneRecord& record) {
    auto fail = [&](const std::string& why) {
        throw DataError("record '" + record.id + "': " + why);
    };
    if (record.id.empty()) throw DataError("record with empty id");
    if (record.width <= 0 || record.height <= 0) fail("non-positive image dimensions");
    if (!record.camera.valid()) fail("invalid camera calibration");
    for (const auto& obj : record.gt_objects) {
        if (!(obj.bbox.x_min < obj.bbox.x_max && obj.bbox.y_min < obj.bbox.y_max)) {
            fail("degenerate gt bbox");
        }
        if (obj.bbox.x_min < 0 || obj.bbox.y_min < 0 || obj.bbox.x_max > record.width ||
            obj.bbox.y_max > record.height) {
            fail("gt bbox outside image bounds");
        }
        if (obj.distance_m && *obj.distance_m <= 0) fail("non-positive distance_m");
        if (obj.size_3d && (obj.size_3d->l <= 0 || obj.size_3d->w <= 0 || obj.size_3d->h <= 0)) {
            fail("non-positive size_3d");
        }
    }
    auto check_poly = [&](const Polygon& poly, const char* name) {
        if (poly.size() < 3) fail(std::string(name) + " polygon has fewer than 3 vertices");
        if (!polygon_is_simple(poly)) fail(std::string(name) + " polygon self-intersects");
    };
    check_poly(record.lanes.ego, "ego");
    if (polygon_area(record.lanes.ego) <= 0) fail("ego polygon has zero area");
    if (record.lanes.left) check_poly(*record.lanes.left, "left");
    if (record.lanes.right) check_poly(*record.lanes.right, "right");
}

namespace {

BoxF parse_bbox(const json& j) {
    if (!j.is_array() || j.size() != 4) throw DataError("bbox must be [x_min,y_min,x_max,y_max]");
    return BoxF{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

Polygon parse_polygon(const json& j) {
    Polygon poly;
    for (const auto& pt : j) {
        if (!pt.is_array() || pt.size() != 2) throw DataError("polygon vertex must be [x,y]");
        poly.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return poly;
}

json polygon_to_json(const Polygon& poly) {
    json j = json::array();
    for (const auto& p : poly) j.push_back(json::array({p.x, p.y}));
    return j;
}

SceneRecord parse_record(const json& j, const std::filesystem::path& base_dir) {
    static const std::set<std::string> allowed = {"id",     "image", "width", "height",
                                                  "camera", "gt_objects", "lanes", "env"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw DataError("unexpected manifest key '" + it.key() + "'");
    }

    SceneRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.image_path = base_dir / j.at("image").get<std::string>();
    rec.width = j.at("width").get<int>();
    rec.height = j.at("height").get<int>();

    const json& cam = j.at("camera");
    rec.camera = CameraCalib{cam.at("fx").get<double>(),         cam.at("fy").get<double>(),
                             cam.at("cx").get<double>(),         cam.at("cy").get<double>(),
                             cam.at("cam_height").get<double>(), cam.at("pitch").get<double>()};

    for (const auto& obj : j.at("gt_objects")) {
        GtObject g;
        g.bbox = parse_bbox(obj.at("bbox"));
        g.cls = object_class_from_string(obj.at("class").get<std::string>());
        if (obj.contains("distance_m")) g.distance_m = obj.at("distance_m").get<double>();
        if (obj.contains("size_3d")) {
            const json& s = obj.at("size_3d");
            g.size_3d = Dims3{s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
        }
        if (obj.contains("source")) g.source = obj.at("source").get<std::string>();
        rec.gt_objects.push_back(std::move(g));
    }

    const json& lanes = j.at("lanes");
    rec.lanes.ego = parse_polygon(lanes.at("ego"));
    if (lanes.contains("left")) rec.lanes.left = parse_polygon(lanes.at("left"));
    if (lanes.contains("right")) rec.lanes.right = parse_polygon(lanes.at("right"));

    const json& env = j.at("env");
    rec.env.road_type = road_type_from_string(env.at("road_type").get<std::string>());
    rec.env.time_of_day = time_of_day_from_string(env.at("time_of_day").get<std::string>());
    rec.env.weather = weather_from_string(env.at("weather").get<std::string>());
    rec.env.traffic_level = traffic_level_from_string(env.at("traffic_level").get<std::string>());
    return rec;
}

json record_to_json(const SceneRecord& rec, const std::filesystem::path& base_dir) {
    json j;
    j["id"] = rec.id;
    j["image"] = std::filesystem::relative(rec.image_path, base_dir).generic_string();
    j["width"] = rec.width;
    j["height"] = rec.height;
    j["camera"] = {{"fx", rec.camera.fx},
                   {"fy", rec.camera.fy},
                   {"cx", rec.camera.cx},
                   {"cy", rec.camera.cy},
                   {"cam_height", rec.camera.cam_height},
                   {"pitch", rec.camera.pitch}};
    json objs = json::array();
    for (const auto& g : rec.gt_objects) {
        json o;
        o["bbox"] = {g.bbox.x_min, g.bbox.y_min, g.bbox.x_max, g.bbox.y_max};
        o["class"] = to_string(g.cls);
        if (g.distance_m) o["distance_m"] = *g.distance_m;
        if (g.size_3d) o["size_3d"] = {g.size_3d->l, g.size_3d->w, g.size_3d->h};
        if (g.source != "human") o["source"] = g.source;
        objs.push_back(std::move(o));
    }
    j["gt_objects"] = std::move(objs);
    json lanes;
    lanes["ego"] = polygon_to_json(rec.lanes.ego);
    if (rec.lanes.left) lanes["left"] = polygon_to_json(*rec.lanes.left);
    if (rec.lanes.right) lanes["right"] = polygon_to_json(*rec.lanes.right);
    j["lanes"] = std::move(lanes);
    j["env"] = {{"road_type", to_string(rec.env.road_type)},
                {"time_of_day", to_string(rec.env.time_of_day)},
                {"weather", to_string(rec.env.weather)},
                {"traffic_level", to_string(rec.env.traffic_level)}};
    return j;
}

} // namespace

std::vector<SceneRecord> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    const std::filesystem::path base_dir = path.has_parent_path() ? path.parent_path() : ".";

    std::vector<SceneRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("manifest parse error at line " + std::to_string(line_no) + ": " +
                            e.what());
        }
        SceneRecord rec;
        try {
            rec = parse_record(j, base_dir);
        } catch (const json::exception& e) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        validate_record(rec);
        if (!seen_ids.insert(rec.id).second) {
            throw DataError("duplicate record id '" + rec.id + "' at line " +
                            std::to_string(line_no));
        }
        if (!std::filesystem::exists(rec.image_path)) {
            throw DataError("record '" + rec.id + "': missing image file " +
                            rec.image_path.string());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void save_manifest(const std::filesystem::path& path, const std::vector<SceneRecord>& records) {
    const std::filesystem::path base_dir =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    for (const auto& rec : records) {
        out << record_to_json(rec, base_dir).dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SceneRecord> stratified_sample(const std::vector<SceneRecord>& records,
                                           int per_bucket, std::uint64_t seed) {
    if (per_bucket < 1) throw DataError("per_bucket must be >= 1");

    std::map<std::array<int, 4>, std::vector<const SceneRecord*>> buckets;
    for (const auto& rec : records) buckets[rec.env.key()].push_back(&rec);

    std::vector<SceneRecord> out;
    for (auto& [key, members] : buckets) {
        // Selection must not depend on manifest order, only on ids and seed.
        std::sort(members.begin(), members.end(),
                  [](const SceneRecord* a, const SceneRecord* b) { return a->id < b->id; });
        std::uint64_t h = fnv1a64_u64(seed, 0xcbf29ce484222325ULL);
        for (int k : key) h = fnv1a64_u64(static_cast<std::uint64_t>(k), h);
        Rng rng(mix64(h));

        const std::size_t take = std::min<std::size_t>(per_bucket, members.size());
        // Partial Fisher-Yates: the first `take` slots end up as the sample.
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + rng.uniform_index(members.size() - i);
            std::swap(members[i], members[j]);
        }
        std::vector<const SceneRecord*> chosen(members.begin(), members.begin() + take);
        std::sort(chosen.begin(), chosen.end(),
                  [](const SceneRecord* a, const SceneRecord* b) { return a->id < b->id; });
        for (const SceneRecord* rec : chosen) out.push_back(*rec);
    }
    return out;
}

} // namespace debris
