#pragma once

#include <cerrno>
#include <istream>
#include <ostream>
#include <streambuf>

#include <unistd.h>

namespace judgekit::detail {

// Minimal streambuf over a file descriptor, enough to run the line protocol
// over a TCP connection.
class FdStreambuf : public std::streambuf {
 public:
  explicit FdStreambuf(int fd) : fd_(fd) { setg(rbuf_, rbuf_, rbuf_); }

 protected:
  int underflow() override {
    ssize_t n;
    do {
      n = ::read(fd_, rbuf_, sizeof(rbuf_));
    } while (n < 0 && errno == EINTR);
    if (n <= 0) return traits_type::eof();
    setg(rbuf_, rbuf_, rbuf_ + n);
    return traits_type::to_int_type(rbuf_[0]);
  }

  int overflow(int ch) override {
    if (ch == traits_type::eof()) return 0;
    char c = static_cast<char>(ch);
    return write_all(&c, 1) ? ch : traits_type::eof();
  }

  std::streamsize xsputn(const char* data, std::streamsize n) override {
    return write_all(data, static_cast<std::size_t>(n)) ? n : 0;
  }

 private:
  bool write_all(const char* data, std::size_t n) {
    while (n > 0) {
      ssize_t w = ::write(fd_, data, n);
      if (w < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      data += w;
      n -= static_cast<std::size_t>(w);
    }
    return true;
  }

  int fd_;
  char rbuf_[8192];
};

}  // namespace judgekit::detail
