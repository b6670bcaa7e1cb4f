#include "bimtwin/service/server.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace bimtwin::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

class StreamSession : public std::enable_shared_from_this<StreamSession> {
 public:
  StreamSession(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}
  ~StreamSession() { detach(); }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_accept();
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      self->ws_.next_layer().socket().close(ec);
    });
  }

 private:
  void on_accept() {
    std::weak_ptr<StreamSession> weak = shared_from_this();
    auto executor = ws_.get_executor();
    client_ = hub_.attach([weak, executor](const std::string& frame) {
      net::post(executor, [weak, frame] {
        if (auto self = weak.lock()) self->queue(frame);
      });
    });
    attached_ = true;
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->detach();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->hub_.receive(self->client_, text);
      self->read();
    });
  }

  void queue(std::string frame) {
    outbox_.push_back(std::move(frame));
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->detach();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->write();
                    });
  }

  void detach() {
    if (attached_) hub_.detach(client_);
    attached_ = false;
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::uint64_t client_ = 0;
  bool attached_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Hub& hub,
              std::function<void(std::weak_ptr<StreamSession>)> on_stream)
      : stream_(std::move(socket)), hub_(hub), on_stream_(std::move(on_stream)) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->handle();
                     });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/stream") {
        respond(http::status::not_found, "text/plain", "no stream at this path\n");
        return;
      }
      stream_.expires_never();
      auto ws = std::make_shared<StreamSession>(stream_.release_socket(), hub_);
      on_stream_(ws);
      ws->run(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get) {
      respond(http::status::method_not_allowed, "text/plain", "GET only\n");
      return;
    }
    const auto target = req_.target();
    if (target == "/scenario") {
      respond(http::status::ok, "application/json", hub_.scenario_document());
    } else if (target == "/log") {
      respond(http::status::ok, "application/x-ndjson", hub_.log_document());
    } else if (target == "/health") {
      respond(http::status::ok, "application/json",
              json{{"state", workflow::to_string(hub_.state())},
                   {"clients", hub_.clients()},
                   {"session_id", hub_.session_id()}}
                  .dump());
    } else {
      respond(http::status::not_found, "text/plain", "not found\n");
    }
  }

  void respond(http::status status, const char* type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "bimtwin");
    res->set(http::field::content_type, type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec || !res->keep_alive()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  Hub& hub_;
  std::function<void(std::weak_ptr<StreamSession>)> on_stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
  Impl(Hub& h, ServerOptions o) : hub(h), options(std::move(o)), acceptor(io) {
    const tcp::endpoint ep(net::ip::make_address(options.address), options.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
    port = acceptor.local_endpoint().port();
  }

  void accept() {
    acceptor.async_accept(net::make_strand(io), [this](beast::error_code ec, tcp::socket s) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(s), hub, [this](std::weak_ptr<StreamSession> w) {
        std::lock_guard lock(streams_mu);
        streams.push_back(std::move(w));
      })->run();
      accept();
    });
  }

  void drive() {
    while (running) {
      const std::size_t n = hub.advance(static_cast<std::size_t>(options.steps_per_slice));
      if (n == 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      } else if (options.slice_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(options.slice_ms));
      }
    }
  }

  Hub& hub;
  ServerOptions options;
  net::io_context io;
  tcp::acceptor acceptor;
  unsigned short port = 0;
  std::thread network;
  std::thread driver;
  std::atomic<bool> running{false};
  std::mutex streams_mu;
  std::vector<std::weak_ptr<StreamSession>> streams;
};

Server::Server(Hub& hub, ServerOptions options)
    : impl_(std::make_unique<Impl>(hub, std::move(options))) {}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->port; }

void Server::start() {
  if (impl_->running.exchange(true)) return;
  impl_->accept();
  impl_->network = std::thread([this] { impl_->io.run(); });
  impl_->driver = std::thread([this] { impl_->drive(); });
}

void Server::stop() {
  if (!impl_ || !impl_->running.exchange(false)) return;
  net::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  {
    std::lock_guard lock(impl_->streams_mu);
    for (auto& w : impl_->streams) {
      if (auto s = w.lock()) s->close();
    }
  }
  if (impl_->driver.joinable()) impl_->driver.join();
  impl_->io.stop();
  if (impl_->network.joinable()) impl_->network.join();
}

}  // namespace bimtwin::service
