#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace occlureg {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using PointsT = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using MatX = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;

/// Point set with one point per row. Normals are either empty or one unit
/// vector per point.
using Points = PointsT<double>;

struct PointCloud {
  Points points;
  Points normals;

  Eigen::Index size() const { return points.rows(); }
  bool empty() const { return points.rows() == 0; }
  bool has_normals() const {
    return points.rows() > 0 && normals.rows() == points.rows();
  }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define OCCLUREG_ERROR_TYPE(name)   \
  class name : public Error {       \
   public:                          \
    using Error::Error;             \
  }

OCCLUREG_ERROR_TYPE(DegenerateInput);
OCCLUREG_ERROR_TYPE(DimensionMismatch);
OCCLUREG_ERROR_TYPE(EmptyMesh);
OCCLUREG_ERROR_TYPE(NonFiniteScores);
OCCLUREG_ERROR_TYPE(EmptyGroundTruth);
OCCLUREG_ERROR_TYPE(InsufficientCorrespondences);
OCCLUREG_ERROR_TYPE(ConfigError);
OCCLUREG_ERROR_TYPE(MeshLoadError);
OCCLUREG_ERROR_TYPE(EmptyRecords);
OCCLUREG_ERROR_TYPE(MissingField);
OCCLUREG_ERROR_TYPE(IoError);

#undef OCCLUREG_ERROR_TYPE

/// Parse failure in a text file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, long line, const std::string& message)
      : Error(file + ":" + std::to_string(line) + ": " + message),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace occlureg
