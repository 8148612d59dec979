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

#pragma once

#include <filesystem>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cnnlens/matrix_io.hpp"

namespace cnnlens {

enum class ArtifactKind { Confidence, Distance, Projection, Accuracy, Attention, Overlay, Similarity, Cih, Contour };

inline constexpr ArtifactKind kAllArtifactKinds[] = {
    ArtifactKind::Confidence, ArtifactKind::Distance, ArtifactKind::Projection,
    ArtifactKind::Accuracy,   ArtifactKind::Attention, ArtifactKind::Overlay,
    ArtifactKind::Similarity, ArtifactKind::Cih,       ArtifactKind::Contour};

std::string_view to_string(ArtifactKind kind) noexcept;
/// Throws InvalidArgument.
ArtifactKind parse_artifact_kind(std::string_view name);
/// File extension without the dot.
std::string_view extension(ArtifactKind kind) noexcept;
/// MIME type served for the kind.
std::string_view content_type(ArtifactKind kind) noexcept;

/// Identity of a stored artifact. Empty string fields are "not applicable".
struct ArtifactKey {
    ArtifactKind kind = ArtifactKind::Confidence;
    std::string model_id;
    std::string dataset_digest;
    std::string method;
    std::string params_digest;
    std::string image_ref;

    /// `kind~model~dataset~method~params~image` with every field escaped to
    /// [A-Za-z0-9.-] plus `_XX` hex escapes. Injective over the field tuple.
    [[nodiscard]] std::string serialize() const;
    /// Inverse of serialize. Throws InvalidArgument.
    static ArtifactKey parse(std::string_view text);

    friend bool operator==(const ArtifactKey&, const ArtifactKey&) = default;
};

/// Filesystem-safe, reversible escaping used for key fields.
std::string escape_component(std::string_view raw);
std::string unescape_component(std::string_view escaped);

/// Content-addressed artifact cache on the local filesystem.
///
/// Layout: <root>/<kind>/<model>/<sha256 of key>.<ext>, plus <root>/index.json
/// listing every stored key. Writes go to a temporary file that is renamed
/// into place, so readers never see a partial artifact.
class ArtifactStore {
  public:
    using Producer = std::function<Bytes()>;

    explicit ArtifactStore(std::filesystem::path root);

    ArtifactStore(const ArtifactStore&) = delete;
    ArtifactStore& operator=(const ArtifactStore&) = delete;

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }
    [[nodiscard]] std::filesystem::path locate(const ArtifactKey& key) const;

    /// Throws InvalidArgument for an empty payload, StorageFull, IoFailure.
    std::filesystem::path put(const ArtifactKey& key, std::span<const std::uint8_t> payload);
    [[nodiscard]] std::optional<Bytes> get(const ArtifactKey& key) const;
    [[nodiscard]] bool contains(const ArtifactKey& key) const;

    /// Returns the stored bytes, or runs `producer` once per key across all
    /// concurrent callers, stores and returns its output. Producer errors
    /// propagate to every waiter and nothing is stored.
    Bytes get_or_compute(const ArtifactKey& key, const Producer& producer, bool* computed = nullptr);

    /// Serialized keys currently listed in the index, sorted.
    [[nodiscard]] std::vector<std::string> keys() const;

  private:
    void record(const std::string& serialized);

    std::filesystem::path root_;
    mutable std::mutex index_mu_;
    std::set<std::string> index_;
    std::mutex flight_mu_;
    std::unordered_map<std::string, std::shared_future<Bytes>> in_flight_;
};

}  // namespace cnnlens
