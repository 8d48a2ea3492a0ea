#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "provnet/preprocess.hpp"

namespace provnet::ingest {

enum class PictType { I, P, B };

struct FrameRecord {
    std::string video_id;
    std::uint32_t frame_index = 0;
    PictType pict_type = PictType::I;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::string frame_path;
    std::string label;    // optional "label" column: class name of the video
    std::string device;   // optional "device" column; defaults to the video id prefix
    bool excluded = false;  // B-frames are kept for bookkeeping but never used

    bool operator==(const FrameRecord&) const = default;
};

struct FrameIndex {
    std::vector<FrameRecord> records;     // grouped by video (first-appearance order), sorted by index
    std::vector<std::string> diagnostics; // rejected rows and reorder warnings
};

// Sidecar CSV with header video_id,frame_index,pict_type,width,height,frame_path
// (extra optional columns: label, device). Unknown picture types are dropped
// with a diagnostic; duplicate (video_id, frame_index) pairs are an InputError.
FrameIndex parse_frame_index(std::istream& sidecar, const std::string& source = "sidecar");

// Device id of a record: explicit column, else the video id up to the first '_'.
std::string device_of(const FrameRecord& record);

std::vector<FrameRecord> select_iframes(std::span<const FrameRecord> records);

struct Triplet {
    std::string video_id;
    std::array<FrameRecord, 3> frames;
};

// Windows of three consecutive P-frames (B-frames removed first) that never
// cross an I-frame. Windows start every `stride` P-frames.
std::vector<Triplet> select_pframe_triplets(std::span<const FrameRecord> records, std::size_t stride = 3);

enum class Split { train, val, test };
enum class SplitBy { video, patch };

const char* to_string(Split split);
const char* to_string(SplitBy split_by);
Split parse_split(const std::string& s);
SplitBy parse_split_by(const std::string& s);

struct PatchListing {
    std::string patch_path;
    int label = -1;
    prep::PatchKind kind = prep::PatchKind::I;
    std::string video_id;
    std::uint32_t frame_index = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    bool operator==(const PatchListing&) const = default;
};

struct ManifestEntry : PatchListing {
    Split split = Split::train;
    bool operator==(const ManifestEntry&) const = default;
};

struct SplitRatios {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
    bool operator==(const SplitRatios&) const = default;
};

struct ManifestOptions {
    SplitRatios ratios;
    std::uint64_t seed = 0;
    SplitBy split_by = SplitBy::video;
};

struct Manifest {
    std::vector<std::string> class_names;
    std::uint64_t seed = 0;
    SplitRatios ratios;
    SplitBy split_by = SplitBy::video;
    std::string tool_version;
    std::vector<ManifestEntry> entries;

    std::vector<ManifestEntry> select(prep::PatchKind kind, Split split) const;
    bool operator==(const Manifest&) const = default;
};

// Assigns videos (or, with SplitBy::patch, individual patches) to splits by a
// seeded shuffle that targets the ratios per class, then down-samples every
// (kind, split) cell to its smallest class count. Throws DataError with a
// per-class report when a class is missing from some split.
Manifest build_manifest(std::vector<PatchListing> listing, std::vector<std::string> class_names,
                        const ManifestOptions& options);

// JSON-lines: one header object, then one object per entry.
void write_manifest(std::ostream& out, const Manifest& manifest);
Manifest read_manifest(std::istream& in);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

std::uint64_t manifest_hash(const Manifest& manifest);

// Throws DataError naming the first entry whose patch file is missing.
void verify_patch_files(const Manifest& manifest, const std::filesystem::path& base_dir);

} // namespace provnet::ingest
