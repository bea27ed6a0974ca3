#include "texseek/agent_net.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <future>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "texseek/error.hpp"
#include "texseek/log.hpp"

namespace texseek {

using nlohmann::json;

// ---- JSON bodies -----------------------------------------------------------

namespace {

json features_to_json(const FeatureVector& f) {
  return {{"scales", f.scales}, {"orientations", f.orientations}, {"values", f.values},
          {"dominant", f.dominant_orientation}};
}

FeatureVector features_from_json(const json& j) {
  FeatureVector f;
  f.scales = j.at("scales").get<int>();
  f.orientations = j.at("orientations").get<int>();
  f.values = j.at("values").get<std::vector<double>>();
  f.dominant_orientation = j.at("dominant").get<int>();
  if (f.scales < 1 || f.orientations < 1 || f.values.size() != static_cast<std::size_t>(2 * f.scales * f.orientations) ||
      f.dominant_orientation < 0 || f.dominant_orientation >= f.orientations) {
    throw ProtocolError("protocol error: inconsistent feature vector");
  }
  return f;
}

json record_to_json(const IndexRecord& r) {
  json attrs = json::array();
  for (const auto& [k, v] : r.attributes) attrs.push_back({k, v});
  return {{"id", r.id}, {"features", features_to_json(r.features)}, {"attributes", attrs}};
}

IndexRecord record_from_json(const json& j) {
  IndexRecord r;
  r.id = j.at("id").get<std::string>();
  r.features = features_from_json(j.at("features"));
  for (const auto& pair : j.at("attributes")) {
    r.attributes.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  }
  return r;
}

struct ToJson {
  json operator()(const Hello& m) const { return {{"type", "hello"}, {"config_hash", m.config_hash}, {"label", m.label}}; }
  json operator()(const IndexRequest& m) const { return {{"type", "index_request"}, {"config_hash", m.config_hash}}; }
  json operator()(const FeatureRecordMsg& m) const {
    return {{"type", "feature_record"}, {"record", record_to_json(m.record)}};
  }
  json operator()(const IndexDone& m) const { return {{"type", "index_done"}, {"count", m.count}}; }
  json operator()(const QueryRequest& m) const {
    return {{"type", "query_request"}, {"config_hash", m.config_hash}, {"features", features_to_json(m.features)},
            {"k", m.k}};
  }
  json operator()(const QueryResult& m) const {
    json results = json::array();
    for (const auto& r : m.results) results.push_back({{"id", r.id}, {"distance", r.distance}});
    return {{"type", "query_result"}, {"results", results}};
  }
  json operator()(const ErrorMessage& m) const { return {{"type", "error"}, {"text", m.text}}; }
};

Message message_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "hello") return Hello{j.at("config_hash").get<std::string>(), j.at("label").get<std::string>()};
  if (type == "index_request") return IndexRequest{j.at("config_hash").get<std::string>()};
  if (type == "feature_record") return FeatureRecordMsg{record_from_json(j.at("record"))};
  if (type == "index_done") return IndexDone{j.at("count").get<std::size_t>()};
  if (type == "query_request") {
    return QueryRequest{j.at("config_hash").get<std::string>(), features_from_json(j.at("features")),
                        j.at("k").get<std::size_t>()};
  }
  if (type == "query_result") {
    QueryResult m;
    for (const auto& r : j.at("results")) {
      m.results.push_back({r.at("id").get<std::string>(), r.at("distance").get<double>()});
    }
    return m;
  }
  if (type == "error") return ErrorMessage{j.at("text").get<std::string>()};
  throw ProtocolError("protocol error: unknown message type '" + type + "'");
}

Message parse_body(std::span<const std::uint8_t> body) {
  try {
    const auto j = json::parse(body.begin(), body.end());
    if (!j.is_object()) throw ProtocolError("protocol error: message is not a JSON object");
    return message_from_json(j);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("protocol error: ") + e.what());
  }
}

std::uint32_t read_length(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

}  // namespace

std::string_view message_type(const Message& m) {
  static constexpr std::string_view kNames[] = {"hello",         "index_request", "feature_record", "index_done",
                                                "query_request", "query_result",  "error"};
  return kNames[m.index()];
}

std::vector<std::uint8_t> frame(const Message& m) {
  const auto body = std::visit(ToJson{}, m).dump();
  if (body.size() > kMaxMessageBytes) throw ProtocolError("framing error: message exceeds 16 MiB");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                                static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Message unframe(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ProtocolError("short read");
  const auto n = read_length(bytes.data());
  if (n > kMaxMessageBytes) throw ProtocolError("framing error: message exceeds 16 MiB");
  if (bytes.size() - 4 < n) throw ProtocolError("short read");
  if (bytes.size() - 4 > n) throw ProtocolError("framing error: trailing bytes after message");
  return parse_body(bytes.subspan(4, n));
}

void send_message(net::Socket& socket, const Message& m) { socket.send_all(frame(m)); }

std::optional<Message> receive_message(net::Socket& socket) {
  std::uint8_t prefix[4];
  if (!socket.recv_exact(prefix)) return std::nullopt;
  const auto n = read_length(prefix);
  if (n > kMaxMessageBytes) throw ProtocolError("framing error: message exceeds 16 MiB");
  std::vector<std::uint8_t> body(n);
  if (!socket.recv_exact(body) && n > 0) throw ProtocolError("short read");
  return parse_body(body);
}

ProviderEndpoint parse_endpoint(std::string_view text) {
  ProviderEndpoint ep;
  if (const auto eq = text.find('='); eq != std::string_view::npos) {
    ep.label = std::string(text.substr(0, eq));
    text.remove_prefix(eq + 1);
    if (ep.label.empty()) throw Error("empty provider label");
  }
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw Error("expected host:port, got '" + std::string(text) + "'");
  ep.host = std::string(text.substr(0, colon));
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535) {
    throw Error("bad port in '" + std::string(text) + "'");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

std::vector<ProviderEndpoint> parse_endpoints(std::string_view text) {
  std::vector<ProviderEndpoint> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_endpoint(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error("no providers given");
  return out;
}

// ---- provider --------------------------------------------------------------

ProviderServer::ProviderServer(std::filesystem::path corpus_dir, PipelineConfig cfg, std::string label,
                               const std::string& host, std::uint16_t port)
    : corpus_dir_(std::move(corpus_dir)),
      cfg_(std::move(cfg)),
      hash_(hash_hex(config_hash(cfg_))),
      label_(std::move(label)),
      listener_(host, port) {}

ProviderServer::~ProviderServer() { stop(); }

void ProviderServer::start() {
  acceptor_ = std::jthread([this] { run(); });
}

// The socket stays open until the connection is reaped so that stop() can
// always shut it down safely from another thread.
struct ProviderServer::Connection {
  net::Socket socket;
  std::atomic<bool> done{false};
  std::jthread thread;
};

void ProviderServer::run() {
  while (!stopping_) {
    auto socket = listener_.accept();
    if (!socket || stopping_) break;
    std::lock_guard lock(conn_mutex_);
    std::erase_if(connections_, [](const auto& c) { return c->done.load(); });
    auto conn = std::make_unique<Connection>();
    conn->socket = std::move(*socket);
    auto* raw = conn.get();
    conn->thread = std::jthread([this, raw] {
      handle(raw->socket);
      raw->socket.shutdown();
      raw->done = true;
    });
    connections_.push_back(std::move(conn));
  }
}

void ProviderServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::unique_ptr<Connection>> connections;
  {
    std::lock_guard lock(conn_mutex_);
    for (auto& c : connections_) c->socket.shutdown();
    connections = std::move(connections_);
  }
  connections.clear();  // joins each worker, then closes its socket
}

const Index& ProviderServer::local_index() {
  std::lock_guard lock(index_mutex_);
  if (!index_) {
    auto report = build_index(corpus_dir_, cfg_);
    logger().info("provider {}: indexed {} images from {}", label_, report.index.size(), corpus_dir_.string());
    index_.emplace(std::move(report.index));
  }
  return *index_;
}

void ProviderServer::handle(net::Socket& socket) {
  socket.set_timeout(kDefaultNetTimeout);
  const auto refuse = [&](const std::string& text) { send_message(socket, ErrorMessage{text}); };
  try {
    while (true) {
      auto msg = receive_message(socket);
      if (!msg) break;
      logger().debug("provider {}: received {}", label_, message_type(*msg));
      if (const auto* hello = std::get_if<Hello>(&*msg)) {
        if (hello->config_hash != hash_) return refuse("config mismatch");
        send_message(socket, Hello{hash_, label_});
      } else if (const auto* req = std::get_if<IndexRequest>(&*msg)) {
        if (req->config_hash != hash_) return refuse("config mismatch");
        const auto& idx = local_index();
        for (const auto& r : idx.records()) send_message(socket, FeatureRecordMsg{r});
        send_message(socket, IndexDone{idx.size()});
      } else if (const auto* query = std::get_if<QueryRequest>(&*msg)) {
        if (query->config_hash != hash_) return refuse("config mismatch");
        send_message(socket, QueryResult{rank(query->features, local_index(), query->k,
                                              RankOptions{cfg_.standardize})});
      } else {
        return refuse("unexpected " + std::string(message_type(*msg)) + " message");
      }
    }
  } catch (const std::exception& e) {
    logger().warn("provider {}: connection dropped: {}", label_, e.what());
    try {
      send_message(socket, ErrorMessage{e.what()});
    } catch (const std::exception&) {
    }
  }
}

// ---- broker ----------------------------------------------------------------

namespace {

// Connects and exchanges hellos; returns the archive label to use.
std::string open_session(net::Socket& socket, const ProviderEndpoint& ep, const std::string& hash) {
  send_message(socket, Hello{hash, ""});
  auto reply = receive_message(socket);
  if (!reply) throw ProtocolError("provider closed the connection");
  if (const auto* err = std::get_if<ErrorMessage>(&*reply)) throw ProtocolError(err->text);
  const auto* hello = std::get_if<Hello>(&*reply);
  if (!hello) throw ProtocolError("expected hello, got " + std::string(message_type(*reply)));
  const auto label = ep.label.empty() ? hello->label : ep.label;
  if (label.empty()) throw ProtocolError("provider has no archive label");
  return label;
}

struct Collected {
  std::string label;
  std::vector<IndexRecord> records;
};

Collected collect_index(const ProviderEndpoint& ep, const std::string& hash, std::chrono::milliseconds timeout) {
  auto socket = net::connect_tcp(ep.host, ep.port, timeout);
  Collected out;
  out.label = open_session(socket, ep, hash);
  send_message(socket, IndexRequest{hash});
  while (true) {
    auto msg = receive_message(socket);
    if (!msg) throw ProtocolError("short read");
    if (auto* rec = std::get_if<FeatureRecordMsg>(&*msg)) {
      rec->record.id = out.label + "/" + rec->record.id;
      out.records.push_back(std::move(rec->record));
    } else if (const auto* done = std::get_if<IndexDone>(&*msg)) {
      if (done->count != out.records.size()) {
        throw ProtocolError("provider announced " + std::to_string(done->count) + " records but sent " +
                            std::to_string(out.records.size()));
      }
      return out;
    } else if (const auto* err = std::get_if<ErrorMessage>(&*msg)) {
      throw ProtocolError(err->text);
    } else {
      throw ProtocolError("unexpected " + std::string(message_type(*msg)) + " message");
    }
  }
}

struct Answer {
  std::string label;
  std::vector<RankedResult> results;
};

Answer ask(const ProviderEndpoint& ep, const std::string& hash, const FeatureVector& q, std::size_t k,
           std::chrono::milliseconds timeout) {
  auto socket = net::connect_tcp(ep.host, ep.port, timeout);
  Answer out;
  out.label = open_session(socket, ep, hash);
  send_message(socket, QueryRequest{hash, q, k});
  auto msg = receive_message(socket);
  if (!msg) throw ProtocolError("short read");
  if (const auto* err = std::get_if<ErrorMessage>(&*msg)) throw ProtocolError(err->text);
  auto* result = std::get_if<QueryResult>(&*msg);
  if (!result) throw ProtocolError("expected query_result, got " + std::string(message_type(*msg)));
  for (auto& r : result->results) r.id = out.label + "/" + r.id;
  out.results = std::move(result->results);
  return out;
}

// Runs fn against every provider concurrently; returns per-provider outcomes in input order.
template <typename T, typename Fn>
std::vector<std::optional<T>> fan_out(const std::vector<ProviderEndpoint>& providers, Fn fn,
                                      std::vector<std::string>& failures) {
  std::vector<std::future<T>> futures;
  futures.reserve(providers.size());
  for (const auto& ep : providers) futures.push_back(std::async(std::launch::async, fn, ep));
  std::vector<std::optional<T>> out;
  for (std::size_t i = 0; i < providers.size(); ++i) {
    try {
      out.emplace_back(futures[i].get());
    } catch (const std::exception& e) {
      failures.push_back(providers[i].address() + ": " + e.what());
      logger().warn("provider {} failed: {}", providers[i].address(), e.what());
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

void check_unique_labels(const std::vector<std::string>& labels) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) throw Error("duplicate archive label '" + l + "'");
  }
}

}  // namespace

DispatchReport dispatch_index(const std::vector<ProviderEndpoint>& providers, const PipelineConfig& cfg,
                              std::chrono::milliseconds timeout) {
  if (providers.empty()) throw Error("no providers given");
  const auto hash = hash_hex(config_hash(cfg));
  std::vector<std::string> failures;
  auto collected = fan_out<Collected>(
      providers, [&](const ProviderEndpoint& ep) { return collect_index(ep, hash, timeout); }, failures);

  std::vector<IndexRecord> records;
  std::vector<ProviderCount> counts;
  std::vector<std::string> labels;
  for (auto& c : collected) {
    if (!c) continue;
    labels.push_back(c->label);
    counts.push_back({c->label, c->records.size()});
    std::move(c->records.begin(), c->records.end(), std::back_inserter(records));
  }
  if (counts.empty()) throw Error("all providers failed");
  check_unique_labels(labels);
  IndexHeader header{cfg.bank.scales, cfg.bank.orientations, config_hash(cfg)};
  return {Index(header, std::move(records)), std::move(counts), std::move(failures)};
}

RemoteQueryReport remote_query(const std::vector<ProviderEndpoint>& providers, const FeatureVector& q, std::size_t k,
                               const PipelineConfig& cfg, std::chrono::milliseconds timeout) {
  if (providers.empty()) throw Error("no providers given");
  if (cfg.standardize) throw Error("standardized ranking needs one index; it is not available across providers");
  if (q.dominant_orientation != 0) throw std::invalid_argument("remote_query: query must be rotation-normalized");
  const auto hash = hash_hex(config_hash(cfg));
  RemoteQueryReport report;
  auto answers = fan_out<Answer>(
      providers, [&](const ProviderEndpoint& ep) { return ask(ep, hash, q, k, timeout); }, report.failures);

  std::vector<std::string> labels;
  for (auto& a : answers) {
    if (!a) continue;
    labels.push_back(a->label);
    std::move(a->results.begin(), a->results.end(), std::back_inserter(report.results));
  }
  if (labels.empty()) throw Error("all providers failed");
  check_unique_labels(labels);
  std::sort(report.results.begin(), report.results.end(), ranked_before);
  if (report.results.size() > k) report.results.resize(k);
  return report;
}

}  // namespace texseek
