#include "provnet/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "provnet/error.hpp"
#include "provnet/hash.hpp"
#include "provnet/log.hpp"
#include "provnet/random.hpp"

namespace provnet::ingest {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::uint32_t parse_u32(const std::string& field, const std::string& where, const char* column) {
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw InputError(where + ": column " + column + " is not a non-negative integer: '" + field + "'");
    }
    return v;
}

const char* kind_name(prep::PatchKind kind) { return kind == prep::PatchKind::I ? "I" : "P"; }

prep::PatchKind parse_kind(const std::string& s) {
    if (s == "I") return prep::PatchKind::I;
    if (s == "P") return prep::PatchKind::P;
    throw DataError("manifest: unknown patch kind '" + s + "'");
}

constexpr std::array<Split, 3> all_splits{Split::train, Split::val, Split::test};

} // namespace

const char* to_string(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

const char* to_string(SplitBy split_by) { return split_by == SplitBy::video ? "video" : "patch"; }

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DataError("unknown split '" + s + "'");
}

SplitBy parse_split_by(const std::string& s) {
    if (s == "video") return SplitBy::video;
    if (s == "patch") return SplitBy::patch;
    throw ConfigError("unknown split-by mode '" + s + "' (expected video or patch)");
}

// ------------------------------------------------------------- sidecar

FrameIndex parse_frame_index(std::istream& sidecar, const std::string& source) {
    FrameIndex index;
    std::string line;
    std::size_t line_no = 0;

    std::map<std::string, std::size_t> column;
    while (std::getline(sidecar, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) return index;
    {
        const auto header = split_csv_line(line);
        for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
        for (const char* required : {"video_id", "frame_index", "pict_type", "width", "height", "frame_path"}) {
            if (!column.contains(required)) {
                throw InputError(source + ":1: header is missing column '" + std::string(required) + "'");
            }
        }
    }
    const auto optional_column = [&](const char* name) -> std::ptrdiff_t {
        const auto it = column.find(name);
        return it == column.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    };
    const std::ptrdiff_t label_col = optional_column("label");
    const std::ptrdiff_t device_col = optional_column("device");

    std::vector<std::string> video_order;
    std::unordered_map<std::string, std::vector<FrameRecord>> by_video;
    while (std::getline(sidecar, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto fields = split_csv_line(line);
        if (fields.size() < column.size()) {
            throw InputError(where + ": expected " + std::to_string(column.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        FrameRecord r;
        r.video_id = fields[column["video_id"]];
        if (r.video_id.empty()) throw InputError(where + ": empty video_id");
        r.frame_index = parse_u32(fields[column["frame_index"]], where, "frame_index");
        r.width = parse_u32(fields[column["width"]], where, "width");
        r.height = parse_u32(fields[column["height"]], where, "height");
        r.frame_path = fields[column["frame_path"]];
        if (label_col >= 0) r.label = fields[static_cast<std::size_t>(label_col)];
        if (device_col >= 0) r.device = fields[static_cast<std::size_t>(device_col)];
        const std::string& type = fields[column["pict_type"]];
        if (type == "I") {
            r.pict_type = PictType::I;
        } else if (type == "P") {
            r.pict_type = PictType::P;
        } else if (type == "B") {
            r.pict_type = PictType::B;
            r.excluded = true;
        } else {
            index.diagnostics.push_back(where + ": rejected record with unknown pict_type '" + type + "'");
            log::warn(index.diagnostics.back());
            continue;
        }
        auto [it, inserted] = by_video.try_emplace(r.video_id);
        if (inserted) video_order.push_back(r.video_id);
        it->second.push_back(std::move(r));
    }

    for (const auto& video : video_order) {
        auto& frames = by_video[video];
        const bool ordered = std::is_sorted(frames.begin(), frames.end(), [](const auto& a, const auto& b) {
            return a.frame_index < b.frame_index;
        });
        if (!ordered) {
            std::stable_sort(frames.begin(), frames.end(),
                             [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
            index.diagnostics.push_back(source + ": frame indices of video " + video + " were out of order; sorted");
            log::warn(index.diagnostics.back());
        }
        for (std::size_t i = 1; i < frames.size(); ++i) {
            if (frames[i].frame_index == frames[i - 1].frame_index) {
                throw InputError(source + ": duplicate record for video " + video + " frame " +
                                 std::to_string(frames[i].frame_index));
            }
        }
        for (auto& f : frames) index.records.push_back(std::move(f));
    }
    return index;
}

std::string device_of(const FrameRecord& record) {
    if (!record.device.empty()) return record.device;
    return record.video_id.substr(0, record.video_id.find('_'));
}

std::vector<FrameRecord> select_iframes(std::span<const FrameRecord> records) {
    std::vector<FrameRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [](const FrameRecord& r) { return r.pict_type == PictType::I; });
    return out;
}

std::vector<Triplet> select_pframe_triplets(std::span<const FrameRecord> records, std::size_t stride) {
    if (stride == 0) throw ConfigError("triplet stride must be positive");
    std::vector<Triplet> triplets;
    std::vector<const FrameRecord*> run;
    const auto flush = [&] {
        for (std::size_t start = 0; start + 3 <= run.size(); start += stride) {
            triplets.push_back({run[start]->video_id, {*run[start], *run[start + 1], *run[start + 2]}});
        }
        run.clear();
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        const FrameRecord& r = records[i];
        if (i > 0 && r.video_id != records[i - 1].video_id) flush();
        if (r.pict_type == PictType::I) {
            flush();
        } else if (r.pict_type == PictType::P) {
            run.push_back(&r);
        }
    }
    flush();
    return triplets;
}

// ------------------------------------------------------------ manifest

std::vector<ManifestEntry> Manifest::select(prep::PatchKind kind, Split split) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
        if (e.kind == kind && e.split == split) out.push_back(e);
    }
    return out;
}

Manifest build_manifest(std::vector<PatchListing> listing, std::vector<std::string> class_names,
                        const ManifestOptions& options) {
    const std::size_t classes = class_names.size();
    if (classes == 0) throw ConfigError("build_manifest: no class names");
    const SplitRatios& r = options.ratios;
    if (r.train <= 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
        throw ConfigError("build_manifest: split ratios must be non-negative and sum to 1");
    }

    std::mt19937_64 rng(options.seed);
    std::vector<Split> split_of(listing.size(), Split::train);

    for (const auto& p : listing) {
        if (p.label < 0 || static_cast<std::size_t>(p.label) >= classes) {
            throw DataError("build_manifest: patch " + p.patch_path + " has label " + std::to_string(p.label) +
                            " outside the " + std::to_string(classes) + " classes");
        }
    }

    const auto assign = [&](double position, double total) {
        const double f = position / total;
        if (f < r.train) return Split::train;
        if (f < r.train + r.val) return Split::val;
        return Split::test;
    };

    if (options.split_by == SplitBy::video) {
        std::unordered_map<std::string, int> video_label;
        std::vector<std::vector<std::string>> videos(classes);
        std::unordered_map<std::string, std::size_t> video_count;
        for (const auto& p : listing) {
            auto [it, inserted] = video_label.try_emplace(p.video_id, p.label);
            if (inserted) {
                videos[static_cast<std::size_t>(p.label)].push_back(p.video_id);
            } else if (it->second != p.label) {
                throw DataError("build_manifest: video " + p.video_id + " carries two different labels");
            }
            ++video_count[p.video_id];
        }
        std::unordered_map<std::string, Split> video_split;
        for (std::size_t c = 0; c < classes; ++c) {
            if (videos[c].empty()) throw DataError("build_manifest: class " + class_names[c] + " has no videos");
            seeded_shuffle(videos[c].begin(), videos[c].end(), rng);
            double total = 0;
            for (const auto& v : videos[c]) total += static_cast<double>(video_count[v]);
            // Each video goes where the midpoint of its patch mass falls.
            double cumulative = 0;
            for (const auto& v : videos[c]) {
                const double n = static_cast<double>(video_count[v]);
                video_split[v] = assign(cumulative + n / 2.0, total);
                cumulative += n;
            }
        }
        for (std::size_t i = 0; i < listing.size(); ++i) split_of[i] = video_split[listing[i].video_id];
    } else {
        std::vector<std::vector<std::size_t>> by_class(classes);
        for (std::size_t i = 0; i < listing.size(); ++i) by_class[static_cast<std::size_t>(listing[i].label)].push_back(i);
        for (std::size_t c = 0; c < classes; ++c) {
            if (by_class[c].empty()) throw DataError("build_manifest: class " + class_names[c] + " has no patches");
            seeded_shuffle(by_class[c].begin(), by_class[c].end(), rng);
            const auto total = static_cast<double>(by_class[c].size());
            for (std::size_t k = 0; k < by_class[c].size(); ++k) {
                split_of[by_class[c][k]] = assign(static_cast<double>(k) + 0.5, total);
            }
        }
    }

    // Balance every (kind, split) cell by down-sampling to the smallest class.
    std::vector<bool> keep(listing.size(), false);
    std::set<prep::PatchKind> kinds;
    for (const auto& p : listing) kinds.insert(p.kind);
    std::ostringstream report;
    bool missing = false;
    for (const prep::PatchKind kind : kinds) {
        for (const Split split : all_splits) {
            std::vector<std::vector<std::size_t>> members(classes);
            for (std::size_t i = 0; i < listing.size(); ++i) {
                if (listing[i].kind == kind && split_of[i] == split) members[static_cast<std::size_t>(listing[i].label)].push_back(i);
            }
            std::size_t smallest = members[0].size();
            for (const auto& m : members) smallest = std::min(smallest, m.size());
            if (smallest == 0) {
                missing = true;
                report << "\n  kind " << kind_name(kind) << ", split " << to_string(split) << ":";
                for (std::size_t c = 0; c < classes; ++c) report << ' ' << class_names[c] << '=' << members[c].size();
                continue;
            }
            for (auto& m : members) {
                seeded_shuffle(m.begin(), m.end(), rng);
                for (std::size_t k = 0; k < smallest; ++k) keep[m[k]] = true;
            }
        }
    }
    if (missing) throw DataError("build_manifest: some class has zero patches in a split:" + report.str());

    Manifest manifest;
    manifest.class_names = std::move(class_names);
    manifest.seed = options.seed;
    manifest.ratios = options.ratios;
    manifest.split_by = options.split_by;
    manifest.tool_version = tool_version;
    for (std::size_t i = 0; i < listing.size(); ++i) {
        if (!keep[i]) continue;
        ManifestEntry e;
        static_cast<PatchListing&>(e) = std::move(listing[i]);
        e.split = split_of[i];
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
    json header;
    header["format"] = "provnet-manifest";
    header["class_names"] = manifest.class_names;
    header["seed"] = manifest.seed;
    header["split_ratios"] = {manifest.ratios.train, manifest.ratios.val, manifest.ratios.test};
    header["split_by"] = to_string(manifest.split_by);
    header["tool_version"] = manifest.tool_version;
    out << header.dump() << '\n';
    for (const auto& e : manifest.entries) {
        json j;
        j["patch_path"] = e.patch_path;
        j["label"] = e.label;
        j["kind"] = kind_name(e.kind);
        j["split"] = to_string(e.split);
        j["video_id"] = e.video_id;
        j["frame_index"] = e.frame_index;
        j["row"] = e.row;
        j["col"] = e.col;
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("failed writing manifest");
}

Manifest read_manifest(std::istream& in) {
    Manifest m;
    std::string line;
    std::size_t line_no = 0;
    try {
        if (!std::getline(in, line)) throw DataError("manifest is empty");
        ++line_no;
        const json header = json::parse(line);
        if (header.value("format", "") != "provnet-manifest") throw DataError("manifest header has wrong format tag");
        m.class_names = header.at("class_names").get<std::vector<std::string>>();
        m.seed = header.at("seed").get<std::uint64_t>();
        const auto ratios = header.at("split_ratios").get<std::vector<double>>();
        if (ratios.size() != 3) throw DataError("manifest split_ratios must have 3 entries");
        m.ratios = {ratios[0], ratios[1], ratios[2]};
        m.split_by = parse_split_by(header.at("split_by").get<std::string>());
        m.tool_version = header.at("tool_version").get<std::string>();
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const json j = json::parse(line);
            ManifestEntry e;
            e.patch_path = j.at("patch_path").get<std::string>();
            e.label = j.at("label").get<int>();
            e.kind = parse_kind(j.at("kind").get<std::string>());
            e.split = parse_split(j.at("split").get<std::string>());
            e.video_id = j.at("video_id").get<std::string>();
            e.frame_index = j.at("frame_index").get<std::uint32_t>();
            e.row = j.at("row").get<std::uint32_t>();
            e.col = j.at("col").get<std::uint32_t>();
            if (e.label < 0 || static_cast<std::size_t>(e.label) >= m.class_names.size()) {
                throw DataError("label out of range");
            }
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_manifest(out, manifest);
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open manifest " + path.string());
    return read_manifest(in);
}

std::uint64_t manifest_hash(const Manifest& manifest) {
    std::ostringstream out;
    write_manifest(out, manifest);
    return fnv1a(out.str());
}

void verify_patch_files(const Manifest& manifest, const std::filesystem::path& base_dir) {
    for (const auto& e : manifest.entries) {
        if (!std::filesystem::exists(base_dir / e.patch_path)) {
            throw DataError("manifest references missing patch file " + (base_dir / e.patch_path).string());
        }
    }
}

} // namespace provnet::ingest
