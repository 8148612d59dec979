// Copyright 2026 The cnnlens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cnnlens/store.hpp"

#include <atomic>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cnnlens/digest.hpp"
#include "cnnlens/error.hpp"
#include "cnnlens/image.hpp"
#include "cnnlens/log.hpp"

namespace cnnlens {

namespace fs = std::filesystem;

std::string_view to_string(ArtifactKind kind) noexcept {
    switch (kind) {
        case ArtifactKind::Confidence: return "confidence";
        case ArtifactKind::Distance: return "distance";
        case ArtifactKind::Projection: return "projection";
        case ArtifactKind::Accuracy: return "accuracy";
        case ArtifactKind::Attention: return "attention";
        case ArtifactKind::Overlay: return "overlay";
        case ArtifactKind::Similarity: return "similarity";
        case ArtifactKind::Cih: return "cih";
        case ArtifactKind::Contour: return "contour";
    }
    return "?";
}

ArtifactKind parse_artifact_kind(std::string_view name) {
    for (ArtifactKind k : kAllArtifactKinds)
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::InvalidArgument, "unknown artifact kind", std::string(name));
}

std::string_view extension(ArtifactKind kind) noexcept {
    switch (kind) {
        case ArtifactKind::Confidence:
        case ArtifactKind::Distance:
        case ArtifactKind::Attention: return "bin";
        case ArtifactKind::Overlay: return "png";
        default: return "json";
    }
}

std::string_view content_type(ArtifactKind kind) noexcept {
    switch (extension(kind)[0]) {
        case 'b': return "application/octet-stream";
        case 'p': return "image/png";
        default: return "application/json";
    }
}

std::string escape_component(std::string_view raw) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto c = static_cast<unsigned char>(raw[i]);
        const bool plain = std::isalnum(c) || c == '-' || (c == '.' && i > 0);
        if (plain) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('_');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

std::string unescape_component(std::string_view escaped) {
    std::string out;
    for (std::size_t i = 0; i < escaped.size(); ++i) {
        if (escaped[i] != '_') {
            out.push_back(escaped[i]);
            continue;
        }
        if (i + 2 >= escaped.size())
            throw Error(ErrorCode::InvalidArgument, "truncated escape in artifact key", std::string(escaped));
        const std::string hex(escaped.substr(i + 1, 2));
        if (hex.size() != 2 || !std::isxdigit(static_cast<unsigned char>(hex[0])) ||
            !std::isxdigit(static_cast<unsigned char>(hex[1])))
            throw Error(ErrorCode::InvalidArgument, "bad escape in artifact key", std::string(escaped));
        out.push_back(static_cast<char>(std::stoi(hex, nullptr, 16)));
        i += 2;
    }
    return out;
}

std::string ArtifactKey::serialize() const {
    std::string out(to_string(kind));
    for (const std::string* field : {&model_id, &dataset_digest, &method, &params_digest, &image_ref}) {
        out.push_back('~');
        out += escape_component(*field);
    }
    return out;
}

ArtifactKey ArtifactKey::parse(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find('~', start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (parts.size() != 6) throw Error(ErrorCode::InvalidArgument, "malformed artifact key", std::string(text));
    ArtifactKey key;
    key.kind = parse_artifact_kind(parts[0]);
    key.model_id = unescape_component(parts[1]);
    key.dataset_digest = unescape_component(parts[2]);
    key.method = unescape_component(parts[3]);
    key.params_digest = unescape_component(parts[4]);
    key.image_ref = unescape_component(parts[5]);
    return key;
}

// ---------------------------------------------------------------------------

namespace {

void write_atomically(const fs::path& target, std::span<const std::uint8_t> payload) {
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << target.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
             << '.' << counter.fetch_add(1);
    const fs::path tmp = target.parent_path() / tmp_name.str();

    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw Error(ErrorCode::IoFailure, "cannot create artifact file", tmp.string() + ": " + std::strerror(errno));
    const std::size_t written = std::fwrite(payload.data(), 1, payload.size(), f);
    int err = written == payload.size() ? 0 : errno;
    if (std::fflush(f) != 0 && !err) err = errno;
    if (std::fclose(f) != 0 && !err) err = errno;
    if (err || written != payload.size()) {
        std::error_code ignore;
        fs::remove(tmp, ignore);
        if (err == ENOSPC) throw Error(ErrorCode::StorageFull, "no space left for artifact", target.string());
        throw Error(ErrorCode::IoFailure, "artifact write failed", target.string() + ": " + std::strerror(err));
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "artifact rename failed", target.string());
    }
}

}  // namespace

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create store root", root_.string() + ": " + ec.message());
    const fs::path index_path = root_ / "index.json";
    if (fs::exists(index_path)) {
        try {
            const auto bytes = read_file(index_path);
            const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
            for (const auto& k : j.at("keys")) index_.insert(k.get<std::string>());
        } catch (const std::exception& e) {
            log::warn(std::string("ignoring unreadable store index: ") + e.what());
        }
    }
}

fs::path ArtifactStore::locate(const ArtifactKey& key) const {
    const std::string model = key.model_id.empty() ? "_" : escape_component(key.model_id);
    return root_ / std::string(to_string(key.kind)) / model /
           (sha256_hex(key.serialize()) + "." + std::string(extension(key.kind)));
}

fs::path ArtifactStore::put(const ArtifactKey& key, std::span<const std::uint8_t> payload) {
    if (payload.empty()) throw Error(ErrorCode::InvalidArgument, "artifact payload is empty", key.serialize());
    const fs::path target = locate(key);
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create artifact directory", ec.message());

    if (auto existing = get(key); existing && std::equal(existing->begin(), existing->end(), payload.begin(),
                                                         payload.end())) {
        record(key.serialize());
        return target;
    }
    write_atomically(target, payload);
    record(key.serialize());
    return target;
}

std::optional<Bytes> ArtifactStore::get(const ArtifactKey& key) const {
    const fs::path target = locate(key);
    std::ifstream in(target, std::ios::binary);
    if (!in) {
        if (fs::exists(target)) throw Error(ErrorCode::IoFailure, "cannot read artifact", target.string());
        return std::nullopt;
    }
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::IoFailure, "artifact read failed", target.string());
    return bytes;
}

bool ArtifactStore::contains(const ArtifactKey& key) const { return fs::exists(locate(key)); }

Bytes ArtifactStore::get_or_compute(const ArtifactKey& key, const Producer& producer, bool* computed) {
    if (computed) *computed = false;
    if (auto hit = get(key)) return std::move(*hit);

    const std::string id = key.serialize();
    std::promise<Bytes> promise;
    {
        std::unique_lock lock(flight_mu_);
        if (auto it = in_flight_.find(id); it != in_flight_.end()) {
            auto future = it->second;
            lock.unlock();
            return future.get();
        }
        in_flight_.emplace(id, promise.get_future().share());
    }

    auto finish = [&] {
        std::lock_guard lock(flight_mu_);
        in_flight_.erase(id);
    };
    try {
        // Another flight may have completed between the miss and registration.
        auto hit = get(key);
        if (!hit) {
            Bytes produced = producer();
            put(key, produced);
            if (computed) *computed = true;
            hit = std::move(produced);
        }
        promise.set_value(*hit);
        finish();
        return std::move(*hit);
    } catch (...) {
        promise.set_exception(std::current_exception());
        finish();
        throw;
    }
}

std::vector<std::string> ArtifactStore::keys() const {
    std::lock_guard lock(index_mu_);
    return {index_.begin(), index_.end()};
}

void ArtifactStore::record(const std::string& serialized) {
    std::lock_guard lock(index_mu_);
    if (!index_.insert(serialized).second) return;
    const std::string text = nlohmann::json{{"keys", index_}}.dump(1);
    write_atomically(root_ / "index.json",
                     {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace cnnlens
