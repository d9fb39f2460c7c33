//! Sequence ingestion (FASTA, FASTQ, one-sequence-per-line) and k-mer list files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::kmer::Kmer;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: Vec<u8>,
    /// Uppercased, never empty.
    pub sequence: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SequenceFormat {
    Fasta,
    Fastq,
    Lines,
    /// Decided from the first non-blank byte: `>` FASTA, `@` FASTQ, else lines.
    #[default]
    Auto,
}

impl FromStr for SequenceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fasta" | "fa" => Ok(Self::Fasta),
            "fastq" | "fq" => Ok(Self::Fastq),
            "lines" | "raw" | "raw-lines" => Ok(Self::Lines),
            "auto" => Ok(Self::Auto),
            other => Err(format!("unknown sequence format '{other}'")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected a '>' header line")]
    MissingFastaHeader,
    #[error("expected an '@' header line")]
    MissingFastqHeader,
    #[error("expected a '+' separator line")]
    MissingSeparator,
    #[error("record ends before its quality line")]
    TruncatedRecord,
    #[error("quality length {quality} differs from sequence length {sequence}")]
    QualityLength { sequence: usize, quality: usize },
    #[error("record has an empty sequence")]
    EmptySequence,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {kind}")]
    Malformed { line: u64, kind: ParseErrorKind },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Opens `path`, transparently decompressing gzip input.
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let mut reader = BufReader::with_capacity(1 << 16, File::open(path)?);
    let head = reader.fill_buf()?;
    if head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b {
        Ok(Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(reader),
        )))
    } else {
        Ok(Box::new(reader))
    }
}

/// Streaming record reader; holds at most one record in memory.
pub struct SequenceReader<R> {
    inner: R,
    format: SequenceFormat,
    line_no: u64,
    line: Vec<u8>,
    // FASTA header already consumed while reading the previous record.
    pending_header: Option<(Vec<u8>, u64)>,
    skip_bad: bool,
    skipped: u64,
    done: bool,
}

fn trim_eol(buf: &mut Vec<u8>) {
    while matches!(buf.last(), Some(b'\n' | b'\r')) {
        buf.pop();
    }
}

impl<R: BufRead> SequenceReader<R> {
    pub fn new(mut inner: R, format: SequenceFormat) -> io::Result<Self> {
        let format = match format {
            SequenceFormat::Auto => detect_format(&mut inner)?,
            f => f,
        };
        Ok(Self {
            inner,
            format,
            line_no: 0,
            line: Vec::new(),
            pending_header: None,
            skip_bad: false,
            skipped: 0,
            done: false,
        })
    }

    /// In skip mode malformed records are dropped (and counted) instead of
    /// ending the stream with an error.
    pub fn skip_bad_records(mut self, skip: bool) -> Self {
        self.skip_bad = skip;
        self
    }

    pub fn format(&self) -> SequenceFormat {
        self.format
    }

    pub fn skipped_records(&self) -> u64 {
        self.skipped
    }

    /// Reads the next line into `self.line` without its terminator.
    fn next_line(&mut self) -> io::Result<bool> {
        self.line.clear();
        if self.inner.read_until(b'\n', &mut self.line)? == 0 {
            return Ok(false);
        }
        self.line_no += 1;
        trim_eol(&mut self.line);
        Ok(true)
    }

    fn malformed(&self, line: u64, kind: ParseErrorKind) -> ParseError {
        ParseError::Malformed { line, kind }
    }

    fn read_lines_record(&mut self) -> Result<Option<SequenceRecord>, ParseError> {
        loop {
            if !self.next_line()? {
                return Ok(None);
            }
            if self.line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            return Ok(Some(SequenceRecord {
                id: self.line_no.to_string().into_bytes(),
                sequence: self.line.to_ascii_uppercase(),
            }));
        }
    }

    fn read_fasta_record(&mut self) -> Result<Option<SequenceRecord>, ParseError> {
        let (id, header_line) = match self.pending_header.take() {
            Some(h) => h,
            None => loop {
                if !self.next_line()? {
                    return Ok(None);
                }
                if self.line.is_empty() {
                    continue;
                }
                if self.line[0] != b'>' {
                    return Err(self.malformed(self.line_no, ParseErrorKind::MissingFastaHeader));
                }
                break (self.line[1..].to_vec(), self.line_no);
            },
        };
        let mut sequence = Vec::new();
        while self.next_line()? {
            if self.line.first() == Some(&b'>') {
                self.pending_header = Some((self.line[1..].to_vec(), self.line_no));
                break;
            }
            sequence.extend(self.line.iter().filter(|b| !b.is_ascii_whitespace()).map(u8::to_ascii_uppercase));
        }
        if sequence.is_empty() {
            return Err(self.malformed(header_line, ParseErrorKind::EmptySequence));
        }
        Ok(Some(SequenceRecord { id, sequence }))
    }

    fn read_fastq_record(&mut self) -> Result<Option<SequenceRecord>, ParseError> {
        let header_line = loop {
            if !self.next_line()? {
                return Ok(None);
            }
            if self.line.is_empty() {
                continue;
            }
            if self.line[0] != b'@' {
                return Err(self.malformed(self.line_no, ParseErrorKind::MissingFastqHeader));
            }
            break self.line_no;
        };
        let id = self.line[1..].to_vec();
        if !self.next_line()? {
            return Err(self.malformed(header_line, ParseErrorKind::TruncatedRecord));
        }
        let sequence = self.line.to_ascii_uppercase();
        if !self.next_line()? {
            return Err(self.malformed(header_line, ParseErrorKind::TruncatedRecord));
        }
        if self.line.first() != Some(&b'+') {
            return Err(self.malformed(self.line_no, ParseErrorKind::MissingSeparator));
        }
        if !self.next_line()? {
            return Err(self.malformed(header_line, ParseErrorKind::TruncatedRecord));
        }
        if self.line.len() != sequence.len() {
            return Err(self.malformed(
                self.line_no,
                ParseErrorKind::QualityLength {
                    sequence: sequence.len(),
                    quality: self.line.len(),
                },
            ));
        }
        if sequence.is_empty() {
            return Err(self.malformed(header_line, ParseErrorKind::EmptySequence));
        }
        Ok(Some(SequenceRecord { id, sequence }))
    }

    // After a FASTQ error, drop lines until the next plausible header.
    fn resync_fastq(&mut self) -> io::Result<()> {
        loop {
            let buf = self.inner.fill_buf()?;
            if buf.is_empty() || buf[0] == b'@' {
                return Ok(());
            }
            if !self.next_line()? {
                return Ok(());
            }
        }
    }

    fn read_record(&mut self) -> Result<Option<SequenceRecord>, ParseError> {
        match self.format {
            SequenceFormat::Fasta => self.read_fasta_record(),
            SequenceFormat::Fastq => self.read_fastq_record(),
            SequenceFormat::Lines | SequenceFormat::Auto => self.read_lines_record(),
        }
    }
}

impl<R: BufRead> Iterator for SequenceReader<R> {
    type Item = Result<SequenceRecord, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            match self.read_record() {
                Ok(Some(rec)) => return Some(Ok(rec)),
                Ok(None) => {
                    self.done = true;
                    return None;
                }
                Err(ParseError::Malformed { .. }) if self.skip_bad => {
                    self.skipped += 1;
                    if self.format == SequenceFormat::Fastq {
                        if let Err(e) = self.resync_fastq() {
                            self.done = true;
                            return Some(Err(e.into()));
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

fn detect_format<R: BufRead>(r: &mut R) -> io::Result<SequenceFormat> {
    loop {
        let buf = r.fill_buf()?;
        if buf.is_empty() {
            return Ok(SequenceFormat::Lines);
        }
        match buf.iter().position(|b| !b.is_ascii_whitespace()) {
            Some(i) => {
                return Ok(match buf[i] {
                    b'>' => SequenceFormat::Fasta,
                    b'@' => SequenceFormat::Fastq,
                    _ => SequenceFormat::Lines,
                })
            }
            None => {
                let n = buf.len();
                r.consume(n);
            }
        }
    }
}

/// Reads sequences from a file (gzip or plain).
pub fn read_sequences_from_path(
    path: &Path,
    format: SequenceFormat,
) -> io::Result<SequenceReader<Box<dyn BufRead + Send>>> {
    SequenceReader::new(open_input(path)?, format)
}

/// Writes one k-mer per line.
pub struct KmerWriter<W: Write> {
    inner: W,
    written: u64,
}

impl<W: Write> KmerWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, written: 0 }
    }

    #[inline]
    pub fn write_kmer(&mut self, kmer: &[u8]) -> io::Result<()> {
        self.inner.write_all(kmer)?;
        self.inner.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_kmer_list<'a, W: Write>(
    sink: W,
    kmers: impl IntoIterator<Item = &'a Kmer>,
) -> io::Result<W> {
    let mut w = KmerWriter::new(sink);
    for k in kmers {
        w.write_kmer(k.as_bytes())?;
    }
    w.finish()
}

#[derive(Debug, Error)]
pub enum KmerListError {
    #[error("line {line}: invalid k-mer '{text}'")]
    Invalid { line: u64, text: String },
    #[error("line {line}: k-mer length {found} differs from {expected} on earlier lines")]
    LengthMismatch { line: u64, expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads a k-mer list written by [`KmerWriter`]: uppercase `ACGTN`, one per
/// line, all the same length.
pub struct KmerReader<R> {
    inner: R,
    line_no: u64,
    buf: Vec<u8>,
    k: Option<usize>,
}

impl<R: BufRead> KmerReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line_no: 0,
            buf: Vec::new(),
            k: None,
        }
    }

    pub fn line_number(&self) -> u64 {
        self.line_no
    }

    /// Like the iterator, but hands out the bytes without allocating.
    pub fn next_bytes(&mut self) -> Option<Result<&[u8], KmerListError>> {
        self.buf.clear();
        match self.inner.read_until(b'\n', &mut self.buf) {
            Ok(0) => return None,
            Ok(_) => {}
            Err(e) => return Some(Err(e.into())),
        }
        self.line_no += 1;
        trim_eol(&mut self.buf);
        if self.buf.is_empty() || !self.buf.iter().all(|b| b"ACGTN".contains(b)) {
            return Some(Err(KmerListError::Invalid {
                line: self.line_no,
                text: String::from_utf8_lossy(&self.buf).into_owned(),
            }));
        }
        match self.k {
            None => self.k = Some(self.buf.len()),
            Some(k) if k != self.buf.len() => {
                return Some(Err(KmerListError::LengthMismatch {
                    line: self.line_no,
                    expected: k,
                    found: self.buf.len(),
                }))
            }
            Some(_) => {}
        }
        Some(Ok(&self.buf))
    }
}

impl<R: BufRead> Iterator for KmerReader<R> {
    type Item = Result<Kmer, KmerListError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_bytes()
            .map(|r| r.map(Kmer::from_normalized))
    }
}

pub fn read_kmer_list<R: BufRead>(source: R) -> Result<Vec<Kmer>, KmerListError> {
    KmerReader::new(source).collect()
}
