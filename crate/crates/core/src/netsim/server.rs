//! Line-protocol endpoint of a concentrator and a blocking client for it.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};

use super::buffer::{BufferStats, SharedBuffer};
use super::wire::{decode_message, encode_message, ErrorCode, Record, WireMessage};

/// Longest accepted request line, newline included.
pub const MAX_LINE_BYTES: usize = 1024;

fn send<W: Write>(writer: &mut W, msg: &WireMessage) -> io::Result<()> {
    let line = encode_message(msg).expect("server replies are well formed");
    writer.write_all(line.as_bytes())
}

/// Reads one line of at most `MAX_LINE_BYTES`. Returns `Ok(None)` at EOF and
/// `Ok(Some(Err(())))` for an oversized line, which is consumed to its end.
fn read_line<R: BufRead>(reader: &mut R, line: &mut Vec<u8>) -> io::Result<Option<Result<(), ()>>> {
    line.clear();
    let n = reader.by_ref().take(MAX_LINE_BYTES as u64).read_until(b'\n', line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() == Some(&b'\n') || n < MAX_LINE_BYTES {
        return Ok(Some(Ok(())));
    }
    // skip the remainder of the oversized line
    let mut rest = Vec::new();
    reader.read_until(b'\n', &mut rest)?;
    Ok(Some(Err(())))
}

/// Serves requests from one connection until EOF. `PUT` appends to `buffer`,
/// `GET k` drains up to `k` records, `STAT` reports counters. Malformed
/// requests get `ERR <code>` and the connection stays open.
pub fn serve_connection<R: BufRead, W: Write>(
    mut reader: R,
    mut writer: W,
    buffer: &SharedBuffer<Record>,
) -> io::Result<()> {
    let mut line = Vec::with_capacity(128);
    while let Some(status) = read_line(&mut reader, &mut line)? {
        if status.is_err() {
            send(&mut writer, &WireMessage::PutErr(ErrorCode::BadFields))?;
            writer.flush()?;
            continue;
        }
        match decode_message(&line) {
            Ok(WireMessage::Put(record)) => {
                buffer.push(record);
                send(&mut writer, &WireMessage::PutAck)?;
            }
            Ok(WireMessage::Get { k }) => {
                let records = buffer.drain(usize::try_from(k).unwrap_or(usize::MAX));
                send(&mut writer, &WireMessage::Begin { m: records.len() as u64 })?;
                for r in records {
                    send(&mut writer, &WireMessage::Rec(r))?;
                }
                send(&mut writer, &WireMessage::End)?;
            }
            Ok(WireMessage::Stat) => {
                let s = buffer.stats();
                send(
                    &mut writer,
                    &WireMessage::StatReply {
                        occupancy: s.occupancy as u64,
                        capacity: s.capacity as u64,
                        dropped_total: s.dropped_total,
                    },
                )?;
            }
            // replies are not requests
            Ok(_) => send(&mut writer, &WireMessage::PutErr(ErrorCode::BadVerb))?,
            Err(e) => send(&mut writer, &WireMessage::PutErr(e.code))?,
        }
        writer.flush()?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("rejected by server: {}", .0.describe())]
    Rejected(ErrorCode),
}

/// Blocking client used by producers and by the data concentrator consumer.
pub struct DcClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl DcClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, NetError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self { reader: BufReader::new(stream.try_clone()?), writer: stream })
    }

    fn request(&mut self, msg: &WireMessage) -> Result<WireMessage, NetError> {
        let line = encode_message(msg).map_err(NetError::Rejected)?;
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        self.reply()
    }

    fn reply(&mut self) -> Result<WireMessage, NetError> {
        let mut line = Vec::new();
        if self.reader.read_until(b'\n', &mut line)? == 0 {
            return Err(NetError::Protocol("connection closed".into()));
        }
        match decode_message(&line) {
            Ok(WireMessage::PutErr(code)) => Err(NetError::Rejected(code)),
            Ok(msg) => Ok(msg),
            Err(e) => Err(NetError::Protocol(e.to_string())),
        }
    }

    pub fn put(&mut self, record: Record) -> Result<(), NetError> {
        match self.request(&WireMessage::Put(record))? {
            WireMessage::PutAck => Ok(()),
            other => Err(NetError::Protocol(format!("unexpected reply {other:?}"))),
        }
    }

    pub fn get(&mut self, k: u64) -> Result<Vec<Record>, NetError> {
        let m = match self.request(&WireMessage::Get { k })? {
            WireMessage::Begin { m } => m,
            other => return Err(NetError::Protocol(format!("unexpected reply {other:?}"))),
        };
        let mut records = Vec::with_capacity(m as usize);
        for _ in 0..m {
            match self.reply()? {
                WireMessage::Rec(r) => records.push(r),
                other => return Err(NetError::Protocol(format!("expected REC, got {other:?}"))),
            }
        }
        match self.reply()? {
            WireMessage::End => Ok(records),
            other => Err(NetError::Protocol(format!("expected END, got {other:?}"))),
        }
    }

    /// Occupancy, capacity and drop count; the push and drain totals are not
    /// on the wire and read as zero.
    pub fn stat(&mut self) -> Result<BufferStats, NetError> {
        match self.request(&WireMessage::Stat)? {
            WireMessage::StatReply { occupancy, capacity, dropped_total } => Ok(BufferStats {
                occupancy: occupancy as usize,
                capacity: capacity as usize,
                dropped_total,
                pushed_total: 0,
                drained_total: 0,
            }),
            other => Err(NetError::Protocol(format!("unexpected reply {other:?}"))),
        }
    }
}
