#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "texseek/config.hpp"
#include "texseek/net.hpp"
#include "texseek/retrieval.hpp"

namespace texseek {

// Broker/provider task protocol. Every message is a 4-byte big-endian length
// followed by a UTF-8 JSON object whose "type" field names the message.

struct Hello {
  std::string config_hash;
  std::string label;
  bool operator==(const Hello&) const = default;
};

struct IndexRequest {
  std::string config_hash;
  bool operator==(const IndexRequest&) const = default;
};

struct FeatureRecordMsg {
  IndexRecord record;
  bool operator==(const FeatureRecordMsg&) const = default;
};

struct IndexDone {
  std::size_t count = 0;
  bool operator==(const IndexDone&) const = default;
};

struct QueryRequest {
  std::string config_hash;
  FeatureVector features;
  std::size_t k = 0;
  bool operator==(const QueryRequest&) const = default;
};

struct QueryResult {
  std::vector<RankedResult> results;
  bool operator==(const QueryResult&) const = default;
};

struct ErrorMessage {
  std::string text;
  bool operator==(const ErrorMessage&) const = default;
};

using Message =
    std::variant<Hello, IndexRequest, FeatureRecordMsg, IndexDone, QueryRequest, QueryResult, ErrorMessage>;

inline constexpr std::size_t kMaxMessageBytes = 16u << 20;

/// Wire name: hello, index_request, feature_record, index_done,
/// query_request, query_result or error.
std::string_view message_type(const Message& m);

std::vector<std::uint8_t> frame(const Message& m);
/// Expects exactly one complete frame. Throws ProtocolError on truncation
/// ("short read"), oversize length, malformed JSON or unknown type.
Message unframe(std::span<const std::uint8_t> bytes);

void send_message(net::Socket& socket, const Message& m);
/// nullopt when the peer closed cleanly between messages.
std::optional<Message> receive_message(net::Socket& socket);

struct ProviderEndpoint {
  std::string host;
  std::uint16_t port = 0;
  std::string label;  // empty: use the label the provider announces

  std::string address() const { return host + ":" + std::to_string(port); }
};

/// "host:port" or "label=host:port".
ProviderEndpoint parse_endpoint(std::string_view text);
/// Comma-separated list of endpoints.
std::vector<ProviderEndpoint> parse_endpoints(std::string_view text);

/**
 * Serves one image archive: answers index requests by computing feature
 * records locally and streaming them back, and answers queries against its
 * own records. Requests carrying a different config hash are refused.
 */
class ProviderServer {
 public:
  ProviderServer(std::filesystem::path corpus_dir, PipelineConfig cfg, std::string label,
                 const std::string& host = "127.0.0.1", std::uint16_t port = 0);
  ~ProviderServer();
  ProviderServer(const ProviderServer&) = delete;
  ProviderServer& operator=(const ProviderServer&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  const std::string& label() const { return label_; }

  /// Accepts connections on a background thread.
  void start();
  /// Accepts connections on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Connection;
  void handle(net::Socket& socket);
  const Index& local_index();

  std::filesystem::path corpus_dir_;
  PipelineConfig cfg_;
  std::string hash_;
  std::string label_;
  net::Listener listener_;

  std::mutex index_mutex_;
  std::optional<Index> index_;

  std::mutex conn_mutex_;
  std::vector<std::unique_ptr<Connection>> connections_;
  std::jthread acceptor_;
  std::atomic<bool> stopping_{false};
};

struct ProviderCount {
  std::string label;
  std::size_t count = 0;
};

struct DispatchReport {
  Index index;
  std::vector<ProviderCount> counts;   // providers that succeeded, in input order
  std::vector<std::string> failures;   // "host:port: reason"
};

inline constexpr std::chrono::milliseconds kDefaultNetTimeout{30000};

/// Collects every provider's records concurrently, prefixes ids with
/// "<label>/", and merges them sorted by id. Unreachable providers are
/// reported in failures; throws Error only when no provider succeeds.
DispatchReport dispatch_index(const std::vector<ProviderEndpoint>& providers, const PipelineConfig& cfg,
                              std::chrono::milliseconds timeout = kDefaultNetTimeout);

struct RemoteQueryReport {
  std::vector<RankedResult> results;
  std::vector<std::string> failures;
};

/// Fans the query out, merges per-provider top-k lists and keeps the global top k.
RemoteQueryReport remote_query(const std::vector<ProviderEndpoint>& providers, const FeatureVector& q, std::size_t k,
                               const PipelineConfig& cfg, std::chrono::milliseconds timeout = kDefaultNetTimeout);

}  // namespace texseek
