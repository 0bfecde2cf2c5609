#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace toolplan::llm {

enum class Role { system, user, assistant };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct CompletionRequest {
    std::string model_id;
    double temperature = 0.0;  // the default for every stage
    int max_tokens = 2048;
    std::vector<ChatMessage> messages;
};

struct TranscriptEntry {
    std::string stage;
    CompletionRequest request;
    std::string response;
    std::int64_t timestamp_ms = 0;
};

// Append-only record of every backend call made during one trial.
struct Transcript {
    std::vector<TranscriptEntry> entries;

    int call_count() const { return static_cast<int>(entries.size()); }
    int call_count(const std::string& stage) const;
    bool has_stage(const std::string& stage) const { return call_count(stage) > 0; }
};

void save_transcript(const Transcript& t, const std::string& path);
Transcript load_transcript(const std::string& path);
nlohmann::json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& j);

struct BackendError : std::runtime_error {
    enum class Kind { transport, replay_miss, credential_missing, malformed };
    Kind kind;
    BackendError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Uniform chat-completion interface. Every call is appended to the active
// transcript. A backend instance is confined to one trial.
class Backend {
  public:
    virtual ~Backend() = default;

    std::string complete(const CompletionRequest& request, const std::string& stage);

    Transcript& transcript() { return transcript_; }
    const Transcript& transcript() const { return transcript_; }

  protected:
    virtual std::string do_complete(const CompletionRequest& request, const std::string& stage) = 0;

  private:
    Transcript transcript_;
};

// Scripted responses for tests: pops entries in push order, optionally
// asserting the stage they are consumed by.
class StubBackend : public Backend {
  public:
    void push_response(std::string text) { responses_.push_back({std::nullopt, std::move(text)}); }
    void push_response(std::string stage, std::string text) {
        responses_.push_back({std::move(stage), std::move(text)});
    }

  protected:
    std::string do_complete(const CompletionRequest& request, const std::string& stage) override;

  private:
    std::vector<std::pair<std::optional<std::string>, std::string>> responses_;
    size_t next_ = 0;
};

// Bit-deterministic playback of a stored fixture. Entries are matched by
// (stage name, per-stage call ordinal); strict mode additionally pins the
// prompt hash recorded in the fixture.
class ReplayBackend : public Backend {
  public:
    struct Entry {
        std::string stage;
        std::string response;
        std::optional<std::string> prompt_hash;
    };

    explicit ReplayBackend(std::vector<Entry> entries, bool strict = false)
        : entries_(std::move(entries)), strict_(strict) {}

    // A missing file yields an empty fixture: the first call is a replay miss.
    static ReplayBackend from_file(const std::string& path, bool strict = false);
    static void save_fixture(const std::vector<Entry>& entries, const std::string& path);
    static std::string prompt_hash(const CompletionRequest& request);

  protected:
    std::string do_complete(const CompletionRequest& request, const std::string& stage) override;

  private:
    std::vector<Entry> entries_;
    bool strict_ = false;
    std::vector<bool> used_;
};

struct LiveConfig {
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4";
    std::string credential_env = "TOOLPLAN_API_KEY";
    int max_retries = 3;
    int backoff_ms = 200;
    int timeout_s = 120;
};

// HTTP chat-completion client. Retries transient transport failures with
// exponential backoff; never mutates request content.
class LiveBackend : public Backend {
  public:
    explicit LiveBackend(LiveConfig config);

  protected:
    std::string do_complete(const CompletionRequest& request, const std::string& stage) override;

  private:
    LiveConfig config_;
    std::string credential_;
    std::string host_;      // scheme://host[:port]
    std::string base_path_; // path prefix, e.g. /v1
};

nlohmann::json request_to_json(const CompletionRequest& r);

}  // namespace toolplan::llm
