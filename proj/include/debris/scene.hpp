#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "debris/camera.hpp"
#include "debris/geometry.hpp"

namespace debris {

enum class RoadType { highway, freeway, suburban, urban, rural, dirt, parking };
enum class TimeOfDay { day, night, dawn_dusk, sunset_sunrise };
enum class Weather { clear, sun, moon, cloud, rain, snow, fog };
enum class TrafficLevel { low, med, high };
enum class ObjectClass { vehicle, pedestrian, bike, debris, other };

const char* to_string(RoadType v);
const char* to_string(TimeOfDay v);
const char* to_string(Weather v);
const char* to_string(TrafficLevel v);
const char* to_string(ObjectClass v);

RoadType road_type_from_string(const std::string& s);
TimeOfDay time_of_day_from_string(const std::string& s);
Weather weather_from_string(const std::string& s);
TrafficLevel traffic_level_from_string(const std::string& s);
ObjectClass object_class_from_string(const std::string& s);

// The stratification key: one bucket per distinct tuple.
struct EnvTags {
    RoadType road_type = RoadType::highway;
    TimeOfDay time_of_day = TimeOfDay::day;
    Weather weather = Weather::clear;
    TrafficLevel traffic_level = TrafficLevel::low;

    std::array<int, 4> key() const {
        return {static_cast<int>(road_type), static_cast<int>(time_of_day),
                static_cast<int>(weather), static_cast<int>(traffic_level)};
    }
    friend bool operator==(const EnvTags&, const EnvTags&) = default;
};

struct GtObject {
    BoxF bbox;
    ObjectClass cls = ObjectClass::other;
    std::optional<double> distance_m;
    std::optional<Dims3> size_3d;
    // "human" for labels carried in from the manifest, "synthetic" for
    // augmentation-generated ones.
    std::string source = "human";
};

struct LaneSet {
    Polygon ego;
    std::optional<Polygon> left;
    std::optional<Polygon> right;
};

struct SceneRecord {
    std::string id;
    std::filesystem::path image_path; // resolved against the manifest directory
    int width = 0;
    int height = 0;
    CameraCalib camera;
    std::vector<GtObject> gt_objects;
    LaneSet lanes;
    EnvTags env;
};

// Throws DataError naming the record when an invariant fails.
void validate_record(const SceneRecord& record);

// JSONL manifest, one record per line. Image paths in the file are relative
// to the manifest's directory; load resolves them and checks existence.
std::vector<SceneRecord> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<SceneRecord>& records);

// min(per_bucket, bucket size) records per EnvTags bucket, chosen
// deterministically from the seed. Output sorted by (bucket key, record id).
std::vector<SceneRecord> stratified_sample(const std::vector<SceneRecord>& records,
                                           int per_bucket, std::uint64_t seed);

} // namespace debris
