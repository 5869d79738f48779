#include "popsynth/genpipe/checkpoint.h"
#include "popsynth/codebook/survey_io.h"
#include "popsynth/core/error.h"
#include "popsynth/core/hash.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace popsynth {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view records_file = "records.csv";
constexpr std::string_view meta_file = "meta.json";

std::string read_file(const fs::path &path) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw CheckpointError("cannot read checkpoint file " + path.string());
    }
    std::ostringstream text;
    text << input.rdbuf();
    return text.str();
}

void write_file(const fs::path &path, std::string_view content, std::ios::openmode mode) {
    std::ofstream out{path, std::ios::binary | mode};
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
        throw CheckpointError("cannot write checkpoint file " + path.string());
    }
}

} // namespace

nlohmann::json to_json(const CheckpointMeta &meta) {
    return nlohmann::json{{"spec_digest", meta.spec_digest},         {"batches_issued", meta.batches_issued},
                          {"accepted_count", meta.accepted_count},   {"rejected_count", meta.rejected_count},
                          {"dead_batches", meta.dead_batches},       {"dead_streak", meta.dead_streak},
                          {"records_bytes", meta.records_bytes},     {"records_sha256", meta.records_sha256}};
}

CheckpointMeta checkpoint_meta_from_json(const nlohmann::json &document) {
    try {
        CheckpointMeta meta;
        meta.spec_digest = document.at("spec_digest").get<std::string>();
        meta.batches_issued = document.at("batches_issued").get<std::size_t>();
        meta.accepted_count = document.at("accepted_count").get<std::size_t>();
        meta.rejected_count = document.at("rejected_count").get<std::size_t>();
        meta.dead_batches = document.at("dead_batches").get<std::size_t>();
        meta.dead_streak = document.at("dead_streak").get<std::size_t>();
        meta.records_bytes = document.at("records_bytes").get<std::uintmax_t>();
        meta.records_sha256 = document.at("records_sha256").get<std::string>();
        return meta;
    } catch (const nlohmann::json::exception &e) {
        throw CheckpointError(fmt::format("checkpoint metadata is malformed: {}", e.what()));
    }
}

CheckpointStore::CheckpointStore(fs::path run_dir, std::shared_ptr<const Codebook> codebook)
    : dir_{std::move(run_dir)}, codebook_{std::move(codebook)} {}

bool CheckpointStore::exists() const { return fs::exists(dir_ / meta_file); }

void CheckpointStore::create(const std::string &spec_digest) {
    if (exists()) {
        throw CheckpointError(fmt::format("{} already holds a checkpoint; resume it or choose another run id",
                                          dir_.string()));
    }
    fs::create_directories(dir_ / "raw");
    records_text_ = survey_csv_header(*codebook_, false) + "\n";
    write_file(dir_ / records_file, records_text_, std::ios::trunc);
    meta_ = CheckpointMeta{};
    meta_.spec_digest = spec_digest;
    meta_.records_bytes = records_text_.size();
    meta_.records_sha256 = sha256_hex(records_text_);
    write_meta();
}

SurveyDataset CheckpointStore::load(const std::string &expected_digest) {
    if (!exists()) {
        throw CheckpointError(fmt::format("no checkpoint found in {}", dir_.string()));
    }
    const auto document = nlohmann::json::parse(read_file(dir_ / meta_file), nullptr, false);
    if (document.is_discarded()) {
        throw CheckpointError(fmt::format("{}: meta.json is not valid JSON", dir_.string()));
    }
    auto meta = checkpoint_meta_from_json(document);
    if (meta.spec_digest != expected_digest) {
        throw CheckpointError(fmt::format("{}: generation spec digest {} does not match the checkpoint's {}",
                                          dir_.string(), expected_digest, meta.spec_digest));
    }

    auto text = read_file(dir_ / records_file);
    if (text.size() < meta.records_bytes) {
        throw CheckpointError(fmt::format("{}: records.csv is truncated ({} bytes, {} committed)", dir_.string(),
                                          text.size(), meta.records_bytes));
    }
    if (text.size() > meta.records_bytes) {
        // Rows appended by a batch whose metadata never got committed.
        text.resize(meta.records_bytes);
        write_file(dir_ / records_file, text, std::ios::trunc);
    }
    if (sha256_hex(text) != meta.records_sha256) {
        throw CheckpointError(fmt::format("{}: records.csv content hash does not match the checkpoint", dir_.string()));
    }

    std::istringstream input{text};
    auto records = [&] {
        try {
            return read_survey_csv(input, codebook_, (dir_ / records_file).string());
        } catch (const ValidationError &e) {
            throw CheckpointError(fmt::format("corrupt checkpoint: {}", e.what()));
        }
    }();
    if (records.size() != meta.accepted_count) {
        throw CheckpointError(fmt::format("{}: records.csv holds {} records but the checkpoint committed {}",
                                          dir_.string(), records.size(), meta.accepted_count));
    }
    meta_ = std::move(meta);
    records_text_ = std::move(text);
    return records;
}

void CheckpointStore::save_raw(std::size_t batch_index, const RawBatch &raw) const {
    const auto stem = dir_ / "raw" / fmt::format("batch_{:06}", batch_index);
    write_file(stem.string() + ".txt", raw.payload, std::ios::trunc);
    nlohmann::json meta(raw.provider_meta);
    write_file(stem.string() + ".meta.json", meta.dump(2) + "\n", std::ios::trunc);
}

void CheckpointStore::commit(const std::vector<SurveyRecord> &accepted, CheckpointMeta meta) {
    SurveyDataset batch{codebook_};
    for (const auto &record : accepted) {
        batch.add(record);
    }
    std::ostringstream rows;
    write_survey_rows(rows, batch);
    const auto appended = rows.str();
    write_file(dir_ / records_file, appended, std::ios::app);
    records_text_ += appended;

    meta.spec_digest = meta_.spec_digest;
    meta.records_bytes = records_text_.size();
    meta.records_sha256 = sha256_hex(records_text_);
    meta_ = std::move(meta);
    write_meta();
}

void CheckpointStore::write_meta() const {
    const auto tmp = dir_ / "meta.json.tmp";
    write_file(tmp, to_json(meta_).dump(2) + "\n", std::ios::trunc);
    fs::rename(tmp, dir_ / meta_file);
}

} // namespace popsynth
